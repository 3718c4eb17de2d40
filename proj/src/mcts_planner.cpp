#include "teamrace/mcts_planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <stdexcept>

#include "teamrace/util.hpp"

namespace teamrace {
namespace {

struct Node {
  std::vector<DiscreteState> states;
  int acting = -1;  // seat index, -1 when the horizon is fully resolved
  std::vector<ActionOption> options;
  bool options_ready = false;
  std::size_t untried = 0;
  std::vector<std::unique_ptr<Node>> children;
  int visits = 0;
  std::vector<double> reward_sum;

  explicit Node(std::size_t seats) : reward_sum(seats, 0.0) {}
};

int pick_acting(const std::vector<DiscreteState>& states, int k_final) {
  int best = -1;
  for (int i = 0; i < static_cast<int>(states.size()); ++i) {
    const DiscreteState& s = states[static_cast<std::size_t>(i)];
    if (s.k >= k_final) continue;
    if (best < 0) {
      best = i;
      continue;
    }
    const DiscreteState& champ = states[static_cast<std::size_t>(best)];
    if (s.k != champ.k ? s.k < champ.k
                       : (s.t_tenths != champ.t_tenths ? s.t_tenths < champ.t_tenths
                                                       : s.player < champ.player)) {
      best = i;
    }
  }
  return best;
}

std::vector<LaneOccupancy> occupancy_for(const std::vector<DiscreteState>& states, int seat) {
  std::vector<LaneOccupancy> occupied;
  const int destination = states[static_cast<std::size_t>(seat)].k + 1;
  for (int i = 0; i < static_cast<int>(states.size()); ++i) {
    if (i == seat) continue;
    const DiscreteState& s = states[static_cast<std::size_t>(i)];
    if (s.k == destination) occupied.push_back({s.lane, s.t_tenths});
  }
  return occupied;
}

std::vector<double> terminal_rewards(const std::vector<DiscreteState>& states,
                                     const std::vector<int>& team_of, double zeta) {
  std::vector<double> times(states.size());
  for (std::size_t i = 0; i < states.size(); ++i)
    times[i] = seconds_of_tenths(states[i].t_tenths);
  std::vector<double> rewards(states.size());
  for (std::size_t i = 0; i < states.size(); ++i)
    rewards[i] = -terminal_score(times, static_cast<int>(i), team_of, zeta);
  return rewards;
}

PlanWaypoint make_waypoint(const TrackModel& track, const DiscreteState& after,
                           double v_max) {
  PlanWaypoint wp;
  wp.checkpoint = after.k;
  wp.lane = after.lane;
  wp.target_velocity = velocity_bucket_mid(after.v_bucket, v_max);
  const Checkpoint& cp = track.checkpoint(after.k);
  wp.position = cp.lane_positions.at(static_cast<std::size_t>(after.lane - 1));
  wp.heading = cp.heading;
  return wp;
}

}  // namespace

double uct_score(double mean, int child_visits, int parent_visits, double c) {
  if (child_visits == 0) return std::numeric_limits<double>::infinity();
  return mean + c * std::sqrt(std::log(static_cast<double>(parent_visits)) /
                              static_cast<double>(child_visits));
}

std::vector<int> filter_nearby_opponents(int ego, const WorldSnapshot& world, double radius) {
  std::vector<int> ids;
  const std::size_t e = static_cast<std::size_t>(ego);
  for (std::size_t p = 0; p < world.states.size(); ++p) {
    if (!world.racing[p]) continue;
    if (static_cast<int>(p) == ego || world.team_of[p] == world.team_of[e]) {
      ids.push_back(static_cast<int>(p));
      continue;
    }
    if (distance(world.states[p].position, world.states[e].position) <= radius)
      ids.push_back(static_cast<int>(p));
  }
  return ids;
}

double init_opponent_time_state(const PassageLog& ego, const PassageLog& opponent,
                                bool* cold_start) {
  const int common = std::min(ego.checkpoints_passed(), opponent.checkpoints_passed());
  if (common < 1) {
    if (cold_start) *cold_start = true;
    return 0.0;
  }
  const std::size_t c = static_cast<std::size_t>(common - 1);
  return opponent.times[c] - ego.times[c];
}

PlanningSetup build_planning_states(const DiscreteGame& game, const WorldSnapshot& world,
                                    int ego) {
  PlanningSetup setup;
  const std::vector<int> ids =
      filter_nearby_opponents(ego, world, game.config().nearby_radius);
  for (const int id : ids) {
    const std::size_t p = static_cast<std::size_t>(id);
    DiscreteState s;
    if (id == ego) {
      s = game.discretize(world.states[p], id);
    } else {
      try {
        s = game.discretize(world.states[p], id);
      } catch (const std::domain_error&) {
        continue;  // momentarily off the surface; leave them out of the game
      }
      bool cold = false;
      s.t_tenths = quantize_time_tenths(init_opponent_time_state(
          world.passages[static_cast<std::size_t>(ego)], world.passages[p], &cold));
      setup.cold_start = setup.cold_start || cold;
    }
    if (id == ego) {
      s.t_tenths = 0;
      setup.ego_index = static_cast<int>(setup.states.size());
    }
    setup.states.push_back(s);
    setup.team_of.push_back(world.team_of[p]);
    setup.player_ids.push_back(id);
  }
  return setup;
}

MctsPlan plan(const DiscreteGame& game, const PlanningSetup& setup, const MctsParams& params,
              std::vector<std::vector<double>>* rollout_rewards) {
  if (params.iterations < 1) throw ConfigError("mcts iterations must be >= 1");
  if (!(params.c_uct > 0.0)) throw ConfigError("c_uct must be positive");
  const std::size_t seats = setup.states.size();
  const int ego_k = setup.states[static_cast<std::size_t>(setup.ego_index)].k;
  const int k_final =
      std::min(ego_k + game.config().horizon, game.track().checkpoint_count());
  const double zeta = game.config().zeta;

  std::mt19937_64 rng(params.seed);
  auto root = std::make_unique<Node>(seats);
  root->states = setup.states;
  root->acting = pick_acting(root->states, k_final);

  double reward_lo = std::numeric_limits<double>::infinity();
  double reward_hi = -std::numeric_limits<double>::infinity();

  std::vector<Node*> path;
  for (int iter = 0; iter < params.iterations; ++iter) {
    path.clear();
    Node* node = root.get();
    path.push_back(node);

    // Selection: descend fully expanded interior nodes by max-n UCT.
    while (node->acting >= 0) {
      if (!node->options_ready) {
        node->options = game.enumerate_actions(
            node->states[static_cast<std::size_t>(node->acting)],
            occupancy_for(node->states, node->acting));
        // Fast legs first so shallow budgets spend their visits where the
        // race is usually won; stable order keeps expansion deterministic.
        std::stable_sort(node->options.begin(), node->options.end(),
                         [](const ActionOption& lhs, const ActionOption& rhs) {
                           return lhs.dt < rhs.dt - 1e-12;
                         });
        node->children.resize(node->options.size());
        node->options_ready = true;
      }
      if (node->untried < node->options.size()) break;
      const double range = reward_hi > reward_lo ? reward_hi - reward_lo : 1.0;
      const double c_eff = params.c_uct * range;
      int best = 0;
      double best_score = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < static_cast<int>(node->children.size()); ++i) {
        Node* child = node->children[static_cast<std::size_t>(i)].get();
        const double mean =
            child->reward_sum[static_cast<std::size_t>(node->acting)] / child->visits;
        const double score = uct_score(mean, child->visits, node->visits, c_eff);
        if (score > best_score) {
          best_score = score;
          best = i;
        }
      }
      node = node->children[static_cast<std::size_t>(best)].get();
      path.push_back(node);
    }

    // Expansion of the next untried action, if any remain here.
    if (node->acting >= 0) {
      const std::size_t slot = node->untried++;
      auto child = std::make_unique<Node>(seats);
      child->states = node->states;
      child->states[static_cast<std::size_t>(node->acting)] = game.apply_action(
          node->states[static_cast<std::size_t>(node->acting)], node->options[slot]);
      child->acting = pick_acting(child->states, k_final);
      node->children[slot] = std::move(child);
      node = node->children[slot].get();
      path.push_back(node);
    }

    // Rollout to the shared horizon. Uniform play samples the feasible set
    // evenly; the greedy policy mostly takes the fastest own leg with a
    // seeded 1-in-8 uniform pick, which is far less noisy, so the tree's
    // visits go into the choices that actually differ.
    std::vector<DiscreteState> states = node->states;
    int acting = node->acting;
    while (acting >= 0) {
      const std::vector<ActionOption> options = game.enumerate_actions(
          states[static_cast<std::size_t>(acting)], occupancy_for(states, acting));
      std::size_t pick = 0;
      if (options.size() > 1 &&
          (params.rollout == RolloutPolicy::kUniform || rng() % 8 == 0)) {
        pick = static_cast<std::size_t>(rng() % options.size());
      } else {
        for (std::size_t i = 1; i < options.size(); ++i) {
          if (options[i].dt < options[pick].dt - 1e-12) pick = i;
        }
      }
      states[static_cast<std::size_t>(acting)] =
          game.apply_action(states[static_cast<std::size_t>(acting)], options[pick]);
      acting = pick_acting(states, k_final);
    }
    const std::vector<double> rewards = terminal_rewards(states, setup.team_of, zeta);
    if (rollout_rewards) rollout_rewards->push_back(rewards);
    for (const double r : rewards) {
      reward_lo = std::min(reward_lo, r);
      reward_hi = std::max(reward_hi, r);
    }
    for (Node* visited : path) {
      visited->visits += 1;
      for (std::size_t i = 0; i < seats; ++i) visited->reward_sum[i] += rewards[i];
    }
  }

  // Principal variation by visit count; ties prefer the acting seat's mean,
  // then the lower action index.
  MctsPlan out;
  out.player_ids = setup.player_ids;
  out.waypoints.resize(seats);
  out.root_visits = root->visits;
  out.root_means.resize(seats, 0.0);
  for (std::size_t i = 0; i < seats; ++i)
    out.root_means[i] = root->reward_sum[i] / root->visits;
  Node* node = root.get();
  while (node->acting >= 0 && node->options_ready && node->untried > 0) {
    int best = -1;
    for (int i = 0; i < static_cast<int>(node->children.size()); ++i) {
      Node* child = node->children[static_cast<std::size_t>(i)].get();
      if (!child || child->visits == 0) continue;
      if (best < 0) {
        best = i;
        continue;
      }
      Node* champ = node->children[static_cast<std::size_t>(best)].get();
      const std::size_t seat = static_cast<std::size_t>(node->acting);
      const double mean = child->reward_sum[seat] / child->visits;
      const double champ_mean = champ->reward_sum[seat] / champ->visits;
      if (child->visits != champ->visits ? child->visits > champ->visits
                                         : mean > champ_mean) {
        best = i;
      }
    }
    if (best < 0) break;
    const std::size_t seat = static_cast<std::size_t>(node->acting);
    PlanStep step;
    step.player = node->states[seat].player;
    step.before = node->states[seat];
    step.option = node->options[static_cast<std::size_t>(best)];
    out.steps.push_back(step);
    out.forced_fallback = out.forced_fallback || step.option.forced;
    Node* next = node->children[static_cast<std::size_t>(best)].get();
    out.waypoints[seat].push_back(
        make_waypoint(game.track(), next->states[seat], game.vehicle().v_max));
    node = next;
  }

  // The visited path usually ends before trailing seats catch up to the ego's
  // checkpoint, which would leave some seats without waypoints. Finish the
  // remaining moves greedily (fastest own leg, ties to enumeration order) so
  // every seat is covered out to the shared horizon.
  std::vector<DiscreteState> states = node->states;
  for (int acting = pick_acting(states, k_final); acting >= 0;
       acting = pick_acting(states, k_final)) {
    const std::size_t seat = static_cast<std::size_t>(acting);
    const std::vector<ActionOption> options =
        game.enumerate_actions(states[seat], occupancy_for(states, acting));
    std::size_t pick = 0;
    for (std::size_t i = 1; i < options.size(); ++i) {
      if (options[i].dt < options[pick].dt - 1e-12) pick = i;
    }
    PlanStep step;
    step.player = states[seat].player;
    step.before = states[seat];
    step.option = options[pick];
    out.steps.push_back(step);
    out.forced_fallback = out.forced_fallback || options[pick].forced;
    states[seat] = game.apply_action(states[seat], options[pick]);
    out.waypoints[seat].push_back(
        make_waypoint(game.track(), states[seat], game.vehicle().v_max));
  }
  out.ego_waypoints = out.waypoints[static_cast<std::size_t>(setup.ego_index)];
  return out;
}

bool audit_plan(const DiscreteGame& game, const PlanningSetup& setup,
                const std::vector<PlanStep>& steps) {
  std::vector<DiscreteState> states = setup.states;
  const int ego_k = setup.states[static_cast<std::size_t>(setup.ego_index)].k;
  const int k_final =
      std::min(ego_k + game.config().horizon, game.track().checkpoint_count());
  for (const PlanStep& step : steps) {
    const int acting = pick_acting(states, k_final);
    if (acting < 0) return false;
    DiscreteState& s = states[static_cast<std::size_t>(acting)];
    if (s.player != step.player || s.k != step.before.k || s.lane != step.before.lane ||
        s.v_bucket != step.before.v_bucket || s.t_tenths != step.before.t_tenths ||
        s.e_bucket != step.before.e_bucket || s.lane_changes != step.before.lane_changes) {
      return false;
    }
    const std::vector<LaneOccupancy> occupied = occupancy_for(states, acting);
    if (step.option.forced) {
      // A fallback is only legitimate when the feasible set was truly empty.
      const std::vector<ActionOption> options = game.enumerate_actions(s, occupied);
      if (options.size() != 1 || !options[0].forced) return false;
      if (options[0].action.target_lane != step.option.action.target_lane ||
          options[0].action.target_v_bucket != step.option.action.target_v_bucket) {
        return false;
      }
      s = game.apply_action(s, options[0]);
      continue;
    }
    const std::optional<ActionOption> check =
        game.evaluate_action(s, step.option.action, occupied);
    if (!check) return false;
    if (std::abs(check->dt - step.option.dt) > 1e-12 ||
        std::abs(check->de - step.option.de) > 1e-12) {
      return false;
    }
    s = game.apply_action(s, *check);
  }
  return true;
}

}  // namespace teamrace
