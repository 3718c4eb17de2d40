#include "teamrace/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "teamrace/util.hpp"

namespace teamrace {
namespace {

// First-order convergence horizon for the scripted baseline [s].
constexpr double kPursuitResponse = 0.3;

std::uint64_t mix_seed(std::uint64_t seed, int player) {
  Fnv1a64 hash;
  hash.update_value(seed);
  hash.update_value(player);
  return hash.digest();
}

struct DpLabel {
  double time = std::numeric_limits<double>::infinity();
  int changes = 0;
  int parent = -1;
  DiscreteAction action;
};

}  // namespace

ControllerKind controller_kind_from_string(const std::string& name) {
  if (name == "mcts-lqng") return ControllerKind::kMctsLqng;
  if (name == "fixed-lqng") return ControllerKind::kFixedLqng;
  if (name == "pursuit") return ControllerKind::kScriptedPursuit;
  throw ConfigError("unknown controller kind: " + name +
                    " (expected mcts-lqng, fixed-lqng, or pursuit)");
}

std::string controller_kind_name(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::kMctsLqng: return "mcts-lqng";
    case ControllerKind::kFixedLqng: return "fixed-lqng";
    case ControllerKind::kScriptedPursuit: return "pursuit";
  }
  return "unknown";
}

void PlannerSchedule::validate() const {
  if (low_level_period < 1) throw ConfigError("low_level_period must be >= 1");
  if (high_level_period < 1) throw ConfigError("high_level_period must be >= 1");
}

RacingLine compute_racing_line(const TrackModel& track, const VehicleParams& vehicle) {
  const DiscreteGame game(&track, vehicle, DiscreteGameConfig{});
  const int tau = track.checkpoint_count();
  const int lanes = track.spec().lane_count;
  const int vbuckets = game.v_bucket_count();
  const int lmax = track.spec().lane_change_limit;
  const int per_cp = lanes * vbuckets * 10 * (lmax + 1);
  auto index = [&](int k, int lane, int v, int e, int l) {
    return ((static_cast<std::size_t>(k) * lanes + (lane - 1)) * vbuckets + v) * (10 * (lmax + 1)) +
           static_cast<std::size_t>(e * (lmax + 1) + l);
  };

  std::vector<DpLabel> labels(static_cast<std::size_t>((tau + 1) * per_cp));
  for (int lane = 1; lane <= lanes; ++lane) {
    DpLabel& start = labels[index(0, lane, 0, 0, 0)];
    start.time = 0.0;
    start.changes = 0;
  }

  auto better = [](double time, int changes, const DpLabel& label) {
    return time < label.time - 1e-12 ||
           (time < label.time + 1e-12 && changes < label.changes);
  };

  for (int k = 0; k < tau; ++k) {
    for (int lane = 1; lane <= lanes; ++lane) {
      for (int v = 0; v < vbuckets; ++v) {
        for (int e = 0; e < 10; ++e) {
          for (int l = 0; l <= lmax; ++l) {
            const std::size_t from = index(k, lane, v, e, l);
            if (!std::isfinite(labels[from].time)) continue;
            DiscreteState s;
            s.k = k;
            s.lane = lane;
            s.v_bucket = v;
            s.e_bucket = e;
            s.lane_changes = l;
            for (int lane_to = 1; lane_to <= lanes; ++lane_to) {
              for (int v_to = 0; v_to < vbuckets; ++v_to) {
                const std::optional<ActionOption> option =
                    game.evaluate_action(s, {lane_to, v_to}, {});
                if (!option) continue;
                const DiscreteState next = game.apply_action(s, *option);
                if (next.lane_changes > lmax) continue;
                const double time = labels[from].time + option->dt;
                const int changes = labels[from].changes + (lane_to != lane ? 1 : 0);
                DpLabel& target =
                    labels[index(k + 1, next.lane, next.v_bucket, next.e_bucket,
                                 next.lane_changes)];
                if (better(time, changes, target)) {
                  target.time = time;
                  target.changes = changes;
                  target.parent = static_cast<int>(from);
                  target.action = option->action;
                }
              }
            }
          }
        }
      }
    }
  }

  int best = -1;
  for (int i = tau * per_cp; i < (tau + 1) * per_cp; ++i) {
    const DpLabel& label = labels[static_cast<std::size_t>(i)];
    if (!std::isfinite(label.time)) continue;
    if (best < 0 || better(label.time, label.changes, labels[static_cast<std::size_t>(best)]))
      best = i;
  }
  if (best < 0) throw ConfigError("no feasible racing line: track unreachable under vehicle limits");

  RacingLine line;
  line.predicted_time = labels[static_cast<std::size_t>(best)].time;
  std::vector<DiscreteAction> actions;
  for (int at = best; labels[static_cast<std::size_t>(at)].parent >= 0;
       at = labels[static_cast<std::size_t>(at)].parent) {
    actions.push_back(labels[static_cast<std::size_t>(at)].action);
  }
  std::reverse(actions.begin(), actions.end());
  for (int k = 1; k <= tau; ++k) {
    const DiscreteAction& action = actions[static_cast<std::size_t>(k - 1)];
    PlanWaypoint wp;
    wp.checkpoint = k;
    wp.lane = action.target_lane;
    wp.target_velocity = velocity_bucket_mid(action.target_v_bucket, vehicle.v_max);
    const Checkpoint& cp = track.checkpoint(k);
    wp.position = cp.lane_positions.at(static_cast<std::size_t>(action.target_lane - 1));
    wp.heading = cp.heading;
    line.waypoints.push_back(wp);
  }
  return line;
}

Controller::Controller(const ControllerSpec& spec, const PlannerSchedule& schedule, int player,
                       const TrackModel* track, const VehicleParams* vehicle,
                       const DiscreteGame* game, const RacingLine* line, std::uint64_t seed)
    : spec_(spec),
      schedule_(schedule),
      player_(player),
      track_(track),
      vehicle_(vehicle),
      game_(game),
      line_(line),
      seed_(seed) {
  schedule_.validate();
  spec_.weights.validate();
}

PlanWaypoint Controller::line_target(const ContinuousState& state) const {
  return select_target_waypoint(line_->waypoints, state);
}

std::optional<PlanWaypoint> Controller::plan_target(int player,
                                                    const ContinuousState& state) const {
  if (!has_plan_) return std::nullopt;
  for (std::size_t seat = 0; seat < plan_.player_ids.size(); ++seat) {
    if (plan_.player_ids[seat] != player) continue;
    if (plan_.waypoints[seat].empty()) return std::nullopt;
    return select_target_waypoint(plan_.waypoints[seat], state);
  }
  return std::nullopt;
}

std::optional<PlanWaypoint> Controller::waypoint_for_checkpoint(int checkpoint) const {
  if (spec_.kind == ControllerKind::kMctsLqng) {
    if (!has_plan_) return std::nullopt;
    for (const PlanWaypoint& wp : plan_.ego_waypoints) {
      if (wp.checkpoint == checkpoint) return wp;
    }
    return std::nullopt;
  }
  if (checkpoint < 1 || checkpoint > static_cast<int>(line_->waypoints.size()))
    return std::nullopt;
  return line_->waypoints[static_cast<std::size_t>(checkpoint - 1)];
}

ControlInput Controller::pursue_line(const ContinuousState& ego) {
  // Walk the line for the first waypoint at least lookahead meters out.
  PlanWaypoint target = line_target(ego);
  for (const PlanWaypoint& wp : line_->waypoints) {
    if (wp.checkpoint <= ego.last_checkpoint) continue;
    target = wp;
    if (distance(wp.position, ego.position) >= spec_.pursuit_lookahead) break;
  }
  const Vec2 rel = target.position - ego.position;
  const double bearing = std::atan2(rel.y, rel.x);
  ControlInput u;
  u.yaw_rate = wrap_angle(bearing - ego.heading) / kPursuitResponse;
  u.accel = (target.target_velocity - ego.velocity) / kPursuitResponse;
  return clamp_control(ego, u, *vehicle_);
}

ControlInput Controller::track_with_lqng(const WorldSnapshot& world,
                                         const std::vector<int>& seat_ids,
                                         const std::vector<std::optional<PlanWaypoint>>& targets,
                                         int ego_seat) {
  std::vector<ContinuousState> states;
  states.reserve(seat_ids.size());
  std::vector<int> team_of;
  for (const int id : seat_ids) {
    states.push_back(world.states[static_cast<std::size_t>(id)]);
    team_of.push_back(world.team_of[static_cast<std::size_t>(id)]);
  }
  const ContinuousState& ego = states[static_cast<std::size_t>(ego_seat)];
  const int steps =
      std::max(1, static_cast<int>(std::lround(spec_.lqng_horizon_seconds / 0.02)));

  LqngWeights weights = spec_.weights;
  for (int attempt = 0; attempt <= 3; ++attempt) {
    try {
      const LqGameProblem problem =
          build_costs(states, ego_seat, team_of, targets, weights, 0.02, steps);
      const NashSolution solution = solve_coupled_riccati(problem);
      return compute_control(solution, stack_states(states), ego_seat, ego, *vehicle_);
    } catch (const IllPosedGameError&) {
      weights.rho_control *= 2.0;
    }
  }
  // Competitive terms are what make the coupling singular; strip them.
  weights = spec_.weights;
  weights.rho_teammate = 0.0;
  weights.rho_opponent = 0.0;
  weights.rho_collision = 0.0;
  try {
    const LqGameProblem problem =
        build_costs(states, ego_seat, team_of, targets, weights, 0.02, steps);
    const NashSolution solution = solve_coupled_riccati(problem);
    return compute_control(solution, stack_states(states), ego_seat, ego, *vehicle_);
  } catch (const IllPosedGameError&) {
    log_warn("lqng unsolvable even in tracking-only form; coasting");
    return clamp_control(ego, {0.0, 0.0}, *vehicle_);
  }
}

ControlInput Controller::step(const WorldSnapshot& world, long tick) {
  const ContinuousState& ego = world.states[static_cast<std::size_t>(player_)];
  if (spec_.kind == ControllerKind::kScriptedPursuit) return pursue_line(ego);

  // Off the asphalt the linear tracker orbits its waypoint instead of
  // converging; chase the line directly until back on the surface.
  if (track_->project(ego.position).distance > track_->spec().track_half_width)
    return pursue_line(ego);

  if (spec_.kind == ControllerKind::kMctsLqng &&
      (!has_plan_ || tick % schedule_.high_level_period == 0)) {
    try {
      const PlanningSetup setup = build_planning_states(*game_, world, player_);
      MctsParams params = spec_.mcts;
      // One stream per (race, player): replans from nearby roots then resolve
      // near-ties the same way instead of re-rolling them every second, which
      // otherwise has the kart weave between equal-time lanes.
      params.seed = mix_seed(seed_, player_);
      plan_ = plan(*game_, setup, params);
      has_plan_ = true;
    } catch (const std::domain_error&) {
      // Off the surface: keep any stale plan and let the line steer us back.
      if (!has_plan_) return pursue_line(ego);
    }
  }

  const std::vector<int> seat_ids =
      filter_nearby_opponents(player_, world, game_->config().nearby_radius);
  std::vector<std::optional<PlanWaypoint>> targets;
  int ego_seat = 0;
  for (std::size_t seat = 0; seat < seat_ids.size(); ++seat) {
    const int id = seat_ids[seat];
    if (id == player_) ego_seat = static_cast<int>(seat);
    const ContinuousState& state = world.states[static_cast<std::size_t>(id)];
    std::optional<PlanWaypoint> target;
    if (spec_.kind == ControllerKind::kMctsLqng) target = plan_target(id, state);
    if (!target) target = line_target(state);
    targets.push_back(target);
  }
  return track_with_lqng(world, seat_ids, targets, ego_seat);
}

}  // namespace teamrace
