#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "teamrace/json_io.hpp"
#include "teamrace/race_harness.hpp"
#include "teamrace/util.hpp"

namespace {

using namespace teamrace;

std::string hash_hex(std::uint64_t h) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

int cmd_run(const std::string& track_path, const std::string& vehicle_path,
            const std::string& team_a, const std::string& team_b, int grid, std::uint64_t seed,
            const std::string& trace_path, const std::string& svg_path) {
  const TrackSpec track_spec = load_track_spec(track_path);
  const VehicleParams vehicle = load_vehicle_params(vehicle_path);
  const RaceSetup setup = make_race_setup(track_spec, vehicle, {});

  RaceParams params;
  params.team_a.kind = controller_kind_from_string(team_a);
  params.team_b.kind = controller_kind_from_string(team_b);
  params.grid_id = grid;
  params.seed = seed;

  TraceFile trace;
  const bool want_trace = !trace_path.empty() || !svg_path.empty();
  const RaceResult result = run_race(setup, params, want_trace ? &trace : nullptr);

  if (!trace_path.empty()) save_trace(trace, trace_path);
  if (!svg_path.empty()) write_text_file(svg_path, render_trace_svg(trace, setup.track));

  if (result.aborted) {
    std::fprintf(stderr, "race aborted: %s\n", result.diagnostic.c_str());
    return 3;
  }
  const char* winner = result.score.winner == 0   ? "team A"
                       : result.score.winner == 1 ? "team B"
                                                  : "draw";
  std::printf("track %s  grid %d  seed %llu\n", track_spec.name.c_str(), grid,
              static_cast<unsigned long long>(seed));
  std::printf("winner: %s  points A %.1f  B %.1f\n", winner, result.score.team_points[0],
              result.score.team_points[1]);
  for (int i = 0; i < 4; ++i) {
    if (result.finished[static_cast<std::size_t>(i)]) {
      std::printf("  player %d (%s): finished %.2f s\n", i, i < 2 ? "A" : "B",
                  result.finish_times[static_cast<std::size_t>(i)]);
    } else {
      std::printf("  player %d (%s): DNF\n", i, i < 2 ? "A" : "B");
    }
  }
  std::printf("safety A %.2f  B %.2f\n", result.safety[0], result.safety[1]);
  std::printf("trace hash %s\n", hash_hex(result.trace_hash).c_str());
  return 0;
}

int cmd_tournament(const std::string& config_path, int races, const std::string& out_path,
                   const std::string& format, int jobs) {
  TournamentConfig config = load_tournament_config(config_path);
  if (races > 0) config.races_per_pairing = races;

  const TrackSpec track_spec = load_track_spec(config.track_path);
  const VehicleParams vehicle = load_vehicle_params(config.vehicle_path);
  const RaceSetup setup = make_race_setup(track_spec, vehicle, {});

  const TournamentResult result = run_tournament(setup, config.pairings,
                                                 config.races_per_pairing, config.base_seed,
                                                 config.base_params, jobs);

  if (format == "csv") {
    write_text_file(out_path, export_csv(result));
  } else if (format == "json") {
    write_text_file(out_path, results_to_json(result));
  } else {
    throw ConfigError("format must be csv or json, got \"" + format + "\"");
  }

  bool any_aborted = false;
  for (const PairingAggregate& agg : result.aggregates) {
    std::printf("%s: %d races  wins A %d / B %d / draws %d  points A %.1f / B %.1f  safety A "
                "%.2f / B %.2f\n",
                agg.pairing.c_str(), agg.races, agg.wins_a, agg.wins_b, agg.draws, agg.points_a,
                agg.points_b, agg.safety_a, agg.safety_b);
  }
  for (const RaceRow& row : result.rows) any_aborted = any_aborted || row.result.aborted;
  std::printf("wrote %s\n", out_path.c_str());
  if (any_aborted) {
    std::fprintf(stderr, "one or more races aborted; see %s\n", out_path.c_str());
    return 3;
  }
  return 0;
}

int cmd_line(const std::string& track_path, const std::string& vehicle_path,
             const std::string& out_path) {
  const TrackSpec track_spec = load_track_spec(track_path);
  const VehicleParams vehicle = load_vehicle_params(vehicle_path);
  const TrackModel track = TrackModel::build(track_spec);
  const RacingLine line = compute_racing_line(track, vehicle);
  save_racing_line(line, track.geometry_hash(), vehicle_hash(vehicle), out_path);
  std::printf("racing line over %d checkpoints, predicted time %.3f s -> %s\n",
              track.checkpoint_count(), line.predicted_time, out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic 2v2 team racing simulator"};
  app.require_subcommand(1);

  std::string track_path, vehicle_path, out_path, trace_path, svg_path, config_path;
  std::string team_a = "mcts-lqng", team_b = "fixed-lqng", format = "csv";
  int grid = 1, races = 0, jobs = 1;
  std::uint64_t seed = 0;

  CLI::App* run = app.add_subcommand("run", "run a single race");
  run->add_option("--track", track_path, "track spec JSON")->required();
  run->add_option("--vehicle", vehicle_path, "vehicle params JSON")->required();
  run->add_option("--team-a", team_a, "controller kind for team A");
  run->add_option("--team-b", team_b, "controller kind for team B");
  run->add_option("--grid", grid, "grid permutation id, 1..6");
  run->add_option("--seed", seed, "race seed");
  run->add_option("--trace", trace_path, "write binary trace here");
  run->add_option("--svg", svg_path, "render the race to SVG");

  CLI::App* tournament = app.add_subcommand("tournament", "run a seeded tournament");
  tournament->add_option("--config", config_path, "tournament config JSON")->required();
  tournament->add_option("--races", races, "races per pairing (overrides config)");
  tournament->add_option("--out", out_path, "results file")->required();
  tournament->add_option("--format", format, "csv or json");
  tournament->add_option("--jobs", jobs, "parallel race workers");

  CLI::App* line = app.add_subcommand("line", "compute the single-agent racing line");
  line->add_option("--track", track_path, "track spec JSON")->required();
  line->add_option("--vehicle", vehicle_path, "vehicle params JSON")->required();
  line->add_option("--out", out_path, "racing line JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return cmd_run(track_path, vehicle_path, team_a, team_b, grid, seed, trace_path, svg_path);
    }
    if (tournament->parsed()) {
      return cmd_tournament(config_path, races, out_path, format, jobs);
    }
    if (line->parsed()) {
      return cmd_line(track_path, vehicle_path, out_path);
    }
  } catch (const teamrace::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
