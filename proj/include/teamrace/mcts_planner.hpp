#pragma once
#include <cstdint>
#include <vector>

#include "teamrace/discrete_game.hpp"
#include "teamrace/world.hpp"

namespace teamrace {

// How playouts below the tree pick legs: uniform over the feasible set, or
// near-greedy (fastest own leg with a seeded 1-in-8 uniform exploration).
enum class RolloutPolicy { kUniform, kGreedy };

struct MctsParams {
  int iterations = 2000;
  double c_uct = 1.4142135623730951;  // sqrt(2), scaled by the observed score range
  RolloutPolicy rollout = RolloutPolicy::kUniform;
  std::uint64_t seed = 0;
};

struct PlanWaypoint {
  int checkpoint = 0;
  int lane = 1;
  double target_velocity = 0.0;  // bucket representative [m/s]
  Vec2 position;                 // lane center at the checkpoint
  double heading = 0.0;          // centerline tangent there
};

// One ply of the extracted principal variation, kept for re-auditing.
struct PlanStep {
  int player = 0;  // global player id
  DiscreteState before;
  ActionOption option;
};

struct MctsPlan {
  std::vector<PlanWaypoint> ego_waypoints;
  std::vector<int> player_ids;  // game seats, ego included
  std::vector<std::vector<PlanWaypoint>> waypoints;  // per seat
  std::vector<PlanStep> steps;
  bool forced_fallback = false;
  int root_visits = 0;
  std::vector<double> root_means;  // per-seat backed-up value at the root
};

// Root construction from a live race snapshot.
struct PlanningSetup {
  std::vector<DiscreteState> states;  // sorted by player id
  std::vector<int> team_of;           // per seat
  std::vector<int> player_ids;        // per seat
  int ego_index = 0;
  bool cold_start = false;
};

double uct_score(double mean, int child_visits, int parent_visits, double c);

// Player ids that take part in ego's game: ego, live teammates, and live
// opponents within the radius.
std::vector<int> filter_nearby_opponents(int ego, const WorldSnapshot& world, double radius);

// Relative time offset at the latest checkpoint both players have crossed;
// zero (flagged) when there is none yet.
double init_opponent_time_state(const PassageLog& ego, const PassageLog& opponent,
                                bool* cold_start);

PlanningSetup build_planning_states(const DiscreteGame& game, const WorldSnapshot& world,
                                    int ego);

// Max-n UCT search over the checkpoint game: selection on the acting seat's
// own mean, single expansion per iteration, near-greedy seeded rollouts to
// the shared horizon checkpoint, per-seat backpropagation. Deterministic for
// a fixed (setup, params).
MctsPlan plan(const DiscreteGame& game, const PlanningSetup& setup, const MctsParams& params,
              std::vector<std::vector<double>>* rollout_rewards = nullptr);

// Replays the principal variation through the transition rules; false if any
// step fails re-derivation (audit oracle for emitted plans).
bool audit_plan(const DiscreteGame& game, const PlanningSetup& setup,
                const std::vector<PlanStep>& steps);

}  // namespace teamrace
