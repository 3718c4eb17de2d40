#pragma once
#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "teamrace/controllers.hpp"
#include "teamrace/racing_rules.hpp"
#include "teamrace/reward_eval.hpp"
#include "teamrace/track_model.hpp"
#include "teamrace/world.hpp"

namespace teamrace {

// Everything expensive that races on one (track, vehicle) share. Pinned in
// place because the game and the controllers point back at the track.
struct RaceSetup {
  TrackModel track;
  VehicleParams vehicle;
  DiscreteGame game;
  RacingLine line;

  RaceSetup(TrackModel track_in, const VehicleParams& vehicle_in,
            const DiscreteGameConfig& game_config)
      : track(std::move(track_in)),
        vehicle(vehicle_in),
        game(&track, vehicle_in, game_config),
        line(compute_racing_line(track, vehicle_in)) {}

  RaceSetup(const RaceSetup&) = delete;
  RaceSetup& operator=(const RaceSetup&) = delete;
};

RaceSetup make_race_setup(const TrackSpec& track_spec, const VehicleParams& vehicle,
                          const DiscreteGameConfig& game_config = {});

struct RaceParams {
  ControllerSpec team_a;
  ControllerSpec team_b;
  int grid_id = 1;  // 1..6
  std::uint64_t seed = 0;
  double time_limit = 180.0;  // T [s]
  double dt = 0.02;
  RuleParams rules;
  PlannerSchedule schedule;
  RewardWeights rewards;
};

struct RaceResult {
  std::vector<int> finish_order;  // all four players, best classified first
  std::array<bool, 4> finished{};
  std::array<double, 4> finish_times{};
  TeamScore score;
  std::array<int, 2> collisions_at_fault{};
  std::array<int, 2> illegal_lane_changes{};
  std::array<double, 2> safety{};
  std::array<double, 2> lane_deviation{};      // mean |pos - planned lane pos| at crossings
  std::array<double, 2> velocity_deviation{};  // mean |v - planned v| at crossings
  std::uint64_t trace_hash = 0;
  std::uint64_t seed = 0;
  int grid_id = 1;
  bool aborted = false;
  std::string diagnostic;
};

enum class TraceEventKind { kCheckpoint, kFinish, kContact, kViolation };

struct TraceEvent {
  long tick = 0;
  TraceEventKind kind = TraceEventKind::kCheckpoint;
  int player = -1;
  int other = -1;      // second player for contacts/violations
  int checkpoint = 0;  // crossings only
  double value = 0.0;  // crossing reward total / violation kind index
};

struct TraceTick {
  double time = 0.0;
  std::array<ContinuousState, 4> states{};
  std::array<ControlInput, 4> controls{};
  std::array<StepRewards, 4> rewards{};
};

struct TracePlanRecord {
  long tick = 0;
  int player = 0;
  std::vector<PlanWaypoint> waypoints;
};

struct TraceFile {
  std::uint64_t config_hash = 0;
  std::vector<TraceTick> ticks;
  std::vector<TraceEvent> events;
  std::vector<TracePlanRecord> plans;
};

void save_trace(const TraceFile& trace, const std::string& path);
TraceFile load_trace(const std::string& path);

// Four standing-start states: two slots 10 m ahead of two rear slots, all in
// the two middle lanes; grid ids enumerate team A's C(4,2) slot choices.
std::array<ContinuousState, 4> make_grid(int grid_id, const TrackModel& track);

// Pairwise disc contact pass in ascending (i, j) order: equal push-apart
// along the contact normal, inelastic sharing of the closing normal velocity,
// headings fixed. Returns the contact pairs in processing order.
std::vector<std::pair<int, int>> resolve_disc_contacts(std::vector<ContinuousState>& states,
                                                       const std::vector<bool>& racing,
                                                       double radius);

RaceResult run_race(const RaceSetup& setup, const RaceParams& params,
                    TraceFile* trace = nullptr);

struct TournamentPairing {
  std::string name;
  ControllerSpec team_a;
  ControllerSpec team_b;
};

struct RaceRow {
  std::string pairing;
  RaceResult result;
};

struct PairingAggregate {
  std::string pairing;
  int races = 0;
  int wins_a = 0;
  int wins_b = 0;
  int draws = 0;
  double points_a = 0.0;
  double points_b = 0.0;
  double avg_collisions_a = 0.0;
  double avg_collisions_b = 0.0;
  double avg_illegal_a = 0.0;
  double avg_illegal_b = 0.0;
  double safety_a = 0.0;  // avg collisions-at-fault + avg illegal changes
  double safety_b = 0.0;
  double lane_dev_a = 0.0;
  double lane_dev_b = 0.0;
  double vel_dev_a = 0.0;
  double vel_dev_b = 0.0;
};

struct TournamentResult {
  std::vector<RaceRow> rows;
  std::vector<PairingAggregate> aggregates;
};

// Serial reference: one race at a time, in schedule order.
TournamentResult run_tournament_serial(const RaceSetup& setup,
                                       const std::vector<TournamentPairing>& pairings,
                                       int races_per_pairing, std::uint64_t base_seed,
                                       const RaceParams& base_params);

// OpenMP worker-pool version; slot-indexed results make the merge
// order-independent, so output is identical to the serial reference.
TournamentResult run_tournament(const RaceSetup& setup,
                                const std::vector<TournamentPairing>& pairings,
                                int races_per_pairing, std::uint64_t base_seed,
                                const RaceParams& base_params, int jobs);

std::string export_csv(const TournamentResult& result);

std::string render_trace_svg(const TraceFile& trace, const TrackModel& track);

std::uint64_t vehicle_hash(const VehicleParams& params);

}  // namespace teamrace
