#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "teamrace/discrete_game.hpp"
#include "teamrace/lqng_planner.hpp"
#include "teamrace/mcts_planner.hpp"
#include "teamrace/world.hpp"

namespace teamrace {

enum class ControllerKind { kMctsLqng, kFixedLqng, kScriptedPursuit };

ControllerKind controller_kind_from_string(const std::string& name);
std::string controller_kind_name(ControllerKind kind);

struct ControllerSpec {
  ControllerKind kind = ControllerKind::kMctsLqng;
  MctsParams mcts;
  LqngWeights weights;
  double pursuit_lookahead = 6.0;        // [m]
  double lqng_horizon_seconds = 0.06;    // recursion depth in wall time
};

struct PlannerSchedule {
  int low_level_period = 1;    // ticks between control solves (50 Hz)
  int high_level_period = 50;  // ticks between plan refreshes (1 Hz)

  void validate() const;
};

// Offline lane/velocity schedule over the full track.
struct RacingLine {
  std::vector<PlanWaypoint> waypoints;  // one per checkpoint, 1..tau
  double predicted_time = 0.0;          // DP optimum from a standing start
};

// Single-agent shortest-time dynamic program over the checkpoint graph;
// ties broken toward fewer lane changes. Throws ConfigError when no state
// reaches the final checkpoint.
RacingLine compute_racing_line(const TrackModel& track, const VehicleParams& vehicle);

// One racing agent; owns its plan cache and planning seeds. Deterministic
// given (snapshot stream, seed).
class Controller {
 public:
  Controller(const ControllerSpec& spec, const PlannerSchedule& schedule, int player,
             const TrackModel* track, const VehicleParams* vehicle, const DiscreteGame* game,
             const RacingLine* line, std::uint64_t seed);

  ControlInput step(const WorldSnapshot& world, long tick);

  // Target the agent is currently held to at a checkpoint (deviation metrics).
  std::optional<PlanWaypoint> waypoint_for_checkpoint(int checkpoint) const;
  const MctsPlan* active_plan() const { return has_plan_ ? &plan_ : nullptr; }
  ControllerKind kind() const { return spec_.kind; }

 private:
  ControlInput track_with_lqng(const WorldSnapshot& world,
                               const std::vector<int>& seat_ids,
                               const std::vector<std::optional<PlanWaypoint>>& targets,
                               int ego_seat);
  ControlInput pursue_line(const ContinuousState& ego);
  std::optional<PlanWaypoint> plan_target(int player, const ContinuousState& state) const;
  PlanWaypoint line_target(const ContinuousState& state) const;

  ControllerSpec spec_;
  PlannerSchedule schedule_;
  int player_;
  const TrackModel* track_;
  const VehicleParams* vehicle_;
  const DiscreteGame* game_;
  const RacingLine* line_;
  std::uint64_t seed_;
  MctsPlan plan_;
  bool has_plan_ = false;
};

}  // namespace teamrace
