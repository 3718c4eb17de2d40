#pragma once
#include <cstdint>
#include <optional>
#include <string>

#include "teamrace/race_harness.hpp"

namespace teamrace {

// All loaders throw ConfigError with the offending file and key on malformed
// input; unknown keys are rejected so typos cannot silently fall back to
// defaults.

TrackSpec parse_track_spec(const std::string& text, const std::string& origin = "track spec");
TrackSpec load_track_spec(const std::string& path);

VehicleParams parse_vehicle_params(const std::string& text,
                                   const std::string& origin = "vehicle params");
VehicleParams load_vehicle_params(const std::string& path);

struct TournamentConfig {
  std::string track_path;
  std::string vehicle_path;
  std::vector<TournamentPairing> pairings;
  int races_per_pairing = 48;
  std::uint64_t base_seed = 0;
  RaceParams base_params;
};

// Relative track/vehicle paths are resolved against the config's directory.
TournamentConfig parse_tournament_config(const std::string& text, const std::string& origin);
TournamentConfig load_tournament_config(const std::string& path);

// Racing-line cache, keyed by track geometry and vehicle parameter hashes.
void save_racing_line(const RacingLine& line, std::uint64_t track_hash,
                      std::uint64_t vehicle_hash, const std::string& path);
// Empty when the file is missing or was computed for a different key.
std::optional<RacingLine> load_racing_line(const std::string& path, std::uint64_t track_hash,
                                           std::uint64_t vehicle_hash);

std::string results_to_json(const TournamentResult& result);
TournamentResult results_from_json(const std::string& text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace teamrace
