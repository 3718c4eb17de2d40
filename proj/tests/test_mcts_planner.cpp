#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "teamrace/mcts_planner.hpp"
#include "test_helpers.hpp"

using namespace teamrace;
using namespace teamrace::testing;

namespace {

// Mirrors the search's turn rule: lowest checkpoint first, then time state,
// then player id; -1 once everyone reached the horizon.
int oracle_acting(const std::vector<DiscreteState>& states, int k_final) {
  int best = -1;
  for (int i = 0; i < static_cast<int>(states.size()); ++i) {
    const DiscreteState& s = states[static_cast<std::size_t>(i)];
    if (s.k >= k_final) continue;
    if (best < 0) {
      best = i;
      continue;
    }
    const DiscreteState& champ = states[static_cast<std::size_t>(best)];
    const bool wins = s.k != champ.k
                          ? s.k < champ.k
                          : (s.t_tenths != champ.t_tenths ? s.t_tenths < champ.t_tenths
                                                          : s.player < champ.player);
    if (wins) best = i;
  }
  return best;
}

std::vector<LaneOccupancy> oracle_occupancy(const std::vector<DiscreteState>& states, int seat) {
  std::vector<LaneOccupancy> occupied;
  const int destination = states[static_cast<std::size_t>(seat)].k + 1;
  for (int i = 0; i < static_cast<int>(states.size()); ++i) {
    if (i == seat) continue;
    const DiscreteState& s = states[static_cast<std::size_t>(i)];
    if (s.k == destination) occupied.push_back({s.lane, s.t_tenths});
  }
  return occupied;
}

std::vector<double> oracle_terminal(const std::vector<DiscreteState>& states,
                                    const std::vector<int>& team_of, double zeta) {
  std::vector<double> times(states.size());
  for (std::size_t i = 0; i < states.size(); ++i)
    times[i] = seconds_of_tenths(states[i].t_tenths);
  std::vector<double> rewards(states.size());
  for (std::size_t i = 0; i < states.size(); ++i)
    rewards[i] = -terminal_score(times, static_cast<int>(i), team_of, zeta);
  return rewards;
}

// Exhaustive max-n backward induction: each acting seat picks the child
// maximizing its own backed-up reward. Small toy trees only.
std::vector<double> backward_induction(const DiscreteGame& game,
                                       const std::vector<DiscreteState>& states,
                                       const std::vector<int>& team_of, int k_final) {
  const int acting = oracle_acting(states, k_final);
  if (acting < 0) return oracle_terminal(states, team_of, game.config().zeta);
  const std::vector<ActionOption> options =
      game.enumerate_actions(states[static_cast<std::size_t>(acting)],
                             oracle_occupancy(states, acting));
  std::vector<double> best;
  for (const ActionOption& option : options) {
    std::vector<DiscreteState> child = states;
    child[static_cast<std::size_t>(acting)] =
        game.apply_action(states[static_cast<std::size_t>(acting)], option);
    const std::vector<double> value = backward_induction(game, child, team_of, k_final);
    if (best.empty() ||
        value[static_cast<std::size_t>(acting)] > best[static_cast<std::size_t>(acting)])
      best = value;
  }
  return best;
}

// Two lanes, three checkpoints, two velocity buckets.
TrackSpec toy_spec() {
  TrackSpec spec;
  spec.name = "toy";
  spec.lane_count = 2;
  spec.lane_width = 2.0;
  spec.track_half_width = 2.5;
  spec.lane_change_limit = 2;
  spec.checkpoint_spacing = 12.0;
  spec.segments = {SegmentSpec::straight(40.0)};
  return spec;
}

VehicleParams toy_vehicle() {
  VehicleParams vehicle;
  vehicle.v_max = 4.0;  // two velocity buckets
  return vehicle;
}

DiscreteState toy_state(int player, int lane, int v_bucket) {
  DiscreteState s;
  s.player = player;
  s.lane = lane;
  s.v_bucket = v_bucket;
  return s;
}

WorldSnapshot square_world(const TrackModel& track) {
  WorldSnapshot world;
  world.time = 5.0;
  world.racing.assign(4, true);
  world.team_of = {0, 0, 1, 1};
  world.passages.resize(4);
  // Ego at s=20; teammate far down the road; one close and one far opponent.
  const double arcs[4] = {20.0, 120.0, 30.0, 60.0};
  for (int p = 0; p < 4; ++p) {
    ContinuousState s = state_at(track.offset_point(arcs[p], 0.0), 8.0,
                                 track.pose_at(arcs[p]).heading);
    s.last_checkpoint = static_cast<int>(arcs[p] / 12.0);
    s.elapsed_time = 5.0;
    world.states.push_back(s);
  }
  return world;
}

}  // namespace

TEST_SUITE("mcts_planner") {

TEST_CASE("opponent filter: radius for opponents, teammates always in") {
  const TrackModel track = TrackModel::build(straight_spec(150.0));
  WorldSnapshot world = square_world(track);
  // Distances from ego at s=20: teammate 100 m, opponents 10 m and 40 m.
  std::vector<int> ids = filter_nearby_opponents(0, world, 25.0);
  CHECK(ids == std::vector<int>{0, 1, 2});

  // A finished opponent drops out even when close.
  world.racing[2] = false;
  ids = filter_nearby_opponents(0, world, 25.0);
  CHECK(ids == std::vector<int>{0, 1});

  // A huge radius brings everyone back.
  world.racing[2] = true;
  ids = filter_nearby_opponents(0, world, 200.0);
  CHECK(ids == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("initial opponent time state is the gap at the last shared checkpoint") {
  PassageLog ego;
  ego.times = {6.0, 12.5, 18.0, 24.0, 30.0};
  PassageLog opponent;
  opponent.times = {6.2, 12.8, 18.4, 24.6, 30.4};
  bool cold = false;
  CHECK(init_opponent_time_state(ego, opponent, &cold) == doctest::Approx(0.4).epsilon(1e-12));
  CHECK_FALSE(cold);

  opponent.times.back() = 29.1;
  CHECK(init_opponent_time_state(ego, opponent, &cold) == doctest::Approx(-0.9).epsilon(1e-12));

  // The opponent being further along only moves the shared index.
  opponent.times.push_back(35.0);
  CHECK(init_opponent_time_state(ego, opponent, &cold) == doctest::Approx(-0.9).epsilon(1e-12));

  const PassageLog empty;
  cold = false;
  CHECK(init_opponent_time_state(ego, empty, &cold) == doctest::Approx(0.0));
  CHECK(cold);
}

TEST_CASE("planning root: ego clock at zero, opponents offset by passage gaps") {
  const TrackModel track = TrackModel::build(straight_spec(150.0));
  const DiscreteGame game(&track, VehicleParams{}, DiscreteGameConfig{});
  WorldSnapshot world = square_world(track);
  world.passages[0].times = {10.0};
  world.passages[1].times = {10.5};
  world.passages[2].times = {10.26};

  const PlanningSetup setup = build_planning_states(game, world, 0);
  REQUIRE(setup.player_ids == std::vector<int>{0, 1, 2});
  CHECK(setup.ego_index == 0);
  CHECK(setup.states[0].t_tenths == 0);
  CHECK(setup.states[1].t_tenths == 5);
  CHECK(setup.states[2].t_tenths == 3);  // +0.26 s rounds to 0.3
  CHECK_FALSE(setup.cold_start);

  // Nobody has a shared checkpoint yet: cold start flagged, clocks level.
  WorldSnapshot fresh = square_world(track);
  const PlanningSetup early = build_planning_states(game, fresh, 0);
  CHECK(early.cold_start);
  CHECK(early.states[1].t_tenths == 0);
}

TEST_CASE("uct: unvisited first, pure exploitation at c=0, visit-count bonus") {
  CHECK(uct_score(0.3, 0, 10, 1.0) == std::numeric_limits<double>::infinity());
  CHECK(uct_score(0.7, 3, 10, 0.0) == doctest::Approx(0.7));
  CHECK(uct_score(0.5, 2, 10, 1.0) > uct_score(0.5, 5, 10, 1.0));
}

TEST_CASE("a zero iteration budget is a contract violation") {
  const TrackModel track = TrackModel::build(toy_spec());
  const DiscreteGame game(&track, toy_vehicle(), DiscreteGameConfig{});
  PlanningSetup setup;
  setup.states = {toy_state(0, 1, 0)};
  setup.team_of = {0};
  setup.player_ids = {0};
  MctsParams params;
  params.iterations = 0;
  CHECK_THROWS_AS((void)plan(game, setup, params), ConfigError);
}

TEST_CASE("single-player straight: search matches the exhaustive optimum") {
  TrackSpec spec = straight_spec(60.0);
  spec.lane_count = 2;
  spec.track_half_width = 2.5;
  const TrackModel track = TrackModel::build(spec);
  VehicleParams vehicle;
  vehicle.v_max = 8.0;  // four buckets
  DiscreteGameConfig config;
  config.horizon = 4;
  const DiscreteGame game(&track, vehicle, config);

  PlanningSetup setup;
  setup.states = {toy_state(0, 1, 0)};
  setup.team_of = {0};
  setup.player_ids = {0};

  // Exhaustive minimum arrival time over every feasible action path.
  const std::vector<double> optimum = backward_induction(game, setup.states, setup.team_of, 4);

  MctsParams params;
  params.iterations = 4000;
  params.seed = 5;
  const MctsPlan result = plan(game, setup, params);
  REQUIRE(result.steps.size() == 4);
  DiscreteState end = setup.states[0];
  for (const PlanStep& step : result.steps) end = game.apply_action(end, step.option);
  CHECK(-seconds_of_tenths(end.t_tenths) == doctest::Approx(optimum[0]).epsilon(1e-12));

  // With every lane equivalent, speed is the only lever: the plan rides the
  // top velocity bucket at each waypoint it can reach it.
  REQUIRE(result.ego_waypoints.size() == 4);
  CHECK(result.ego_waypoints.back().target_velocity == doctest::Approx(7.0));
}

TEST_CASE("toy duel: the chosen root action is backward-induction optimal") {
  const TrackModel track = TrackModel::build(toy_spec());
  DiscreteGameConfig config;
  config.horizon = 3;
  const DiscreteGame game(&track, toy_vehicle(), config);
  const std::vector<int> team_of{0, 1};

  std::mt19937_64 scenario_rng(2024);
  int optimal = 0;
  const int runs = 100;
  for (int run = 0; run < runs; ++run) {
    PlanningSetup setup;
    setup.states = {toy_state(0, 1 + static_cast<int>(scenario_rng() % 2u),
                              static_cast<int>(scenario_rng() % 2u)),
                    toy_state(1, 1 + static_cast<int>(scenario_rng() % 2u),
                              static_cast<int>(scenario_rng() % 2u))};
    setup.team_of = team_of;
    setup.player_ids = {0, 1};

    MctsParams params;
    params.iterations = 10000;
    params.seed = 1000 + static_cast<std::uint64_t>(run);
    const MctsPlan result = plan(game, setup, params);
    REQUIRE_FALSE(result.steps.empty());
    REQUIRE(result.steps[0].player == 0);

    // Value of the selected root action under perfect play afterwards.
    std::vector<DiscreteState> child = setup.states;
    child[0] = game.apply_action(setup.states[0], result.steps[0].option);
    const double chosen = backward_induction(game, child, team_of, 3)[0];

    // Best attainable value across all root actions.
    double best = -std::numeric_limits<double>::infinity();
    for (const ActionOption& option :
         game.enumerate_actions(setup.states[0], oracle_occupancy(setup.states, 0))) {
      std::vector<DiscreteState> next = setup.states;
      next[0] = game.apply_action(setup.states[0], option);
      best = std::max(best, backward_induction(game, next, team_of, 3)[0]);
    }
    if (chosen >= best - 1e-9) ++optimal;
  }
  CHECK(optimal >= 95);
}

TEST_CASE("plans are deterministic in (snapshot, seed, params)") {
  const TrackModel track = TrackModel::build(oval_spec());
  const DiscreteGame game(&track, VehicleParams{}, DiscreteGameConfig{});
  PlanningSetup setup;
  setup.states = {toy_state(0, 2, 4), toy_state(1, 3, 5), toy_state(2, 1, 3),
                  toy_state(3, 4, 6)};
  for (auto& s : setup.states) s.k = 2;
  setup.states[1].t_tenths = 4;
  setup.states[2].t_tenths = -3;
  setup.team_of = {0, 0, 1, 1};
  setup.player_ids = {0, 1, 2, 3};

  MctsParams params;
  params.iterations = 500;
  params.seed = 77;
  const MctsPlan first = plan(game, setup, params);
  const MctsPlan second = plan(game, setup, params);
  REQUIRE(first.steps.size() == second.steps.size());
  for (std::size_t i = 0; i < first.steps.size(); ++i) {
    CHECK(first.steps[i].player == second.steps[i].player);
    CHECK(first.steps[i].option.action.target_lane ==
          second.steps[i].option.action.target_lane);
    CHECK(first.steps[i].option.action.target_v_bucket ==
          second.steps[i].option.action.target_v_bucket);
  }
  REQUIRE(first.ego_waypoints.size() == second.ego_waypoints.size());
  for (std::size_t i = 0; i < first.ego_waypoints.size(); ++i) {
    CHECK(first.ego_waypoints[i].lane == second.ego_waypoints[i].lane);
    CHECK(first.ego_waypoints[i].target_velocity ==
          doctest::Approx(second.ego_waypoints[i].target_velocity));
  }

  // A different seed is allowed to disagree, but must still audit clean.
  params.seed = 78;
  const MctsPlan third = plan(game, setup, params);
  CHECK(audit_plan(game, setup, third.steps));
}

TEST_CASE("every emitted plan replays through the transition rules") {
  const TrackModel track = TrackModel::build(oval_spec());
  const DiscreteGame game(&track, VehicleParams{}, DiscreteGameConfig{});
  std::mt19937_64 rng(4242);
  for (int trial = 0; trial < 30; ++trial) {
    PlanningSetup setup;
    const int seats = 2 + static_cast<int>(rng() % 3u);
    for (int p = 0; p < seats; ++p) {
      DiscreteState s = toy_state(p, 1 + static_cast<int>(rng() % 4u),
                                  static_cast<int>(rng() % 12u));
      s.k = static_cast<int>(rng() % 20u);
      s.t_tenths = static_cast<int>(rng() % 30u);
      // Re-anchor everyone to the slowest player's checkpoint neighborhood so
      // the joint game is meaningful.
      s.k = std::min(s.k, 18);
      setup.states.push_back(s);
    }
    const int k_min =
        std::min_element(setup.states.begin(), setup.states.end(),
                         [](const DiscreteState& a, const DiscreteState& b) {
                           return a.k < b.k;
                         })
            ->k;
    for (auto& s : setup.states) s.k = std::min(s.k, k_min + 1);
    for (int p = 0; p < seats; ++p) {
      setup.team_of.push_back(p % 2);
      setup.player_ids.push_back(p);
    }
    setup.ego_index = 0;

    MctsParams params;
    params.iterations = 300;
    params.seed = 9000 + static_cast<std::uint64_t>(trial);
    const MctsPlan result = plan(game, setup, params);
    CHECK(audit_plan(game, setup, result.steps));
    for (const PlanWaypoint& wp : result.ego_waypoints) {
      CHECK(wp.lane >= 1);
      CHECK(wp.lane <= 4);
      CHECK(wp.target_velocity <= 24.0 + 1e-9);
      CHECK(distance(wp.position,
                     track.checkpoint(wp.checkpoint)
                         .lane_positions[static_cast<std::size_t>(wp.lane - 1)]) < 1e-12);
    }
  }
}

TEST_CASE("audit rejects a tampered plan") {
  const TrackModel track = TrackModel::build(oval_spec());
  const DiscreteGame game(&track, VehicleParams{}, DiscreteGameConfig{});
  PlanningSetup setup;
  setup.states = {toy_state(0, 2, 4), toy_state(1, 3, 5)};
  setup.team_of = {0, 1};
  setup.player_ids = {0, 1};
  MctsParams params;
  params.iterations = 200;
  params.seed = 3;
  MctsPlan result = plan(game, setup, params);
  REQUIRE(audit_plan(game, setup, result.steps));
  REQUIRE_FALSE(result.steps.empty());
  result.steps[0].option.dt += 0.05;
  CHECK_FALSE(audit_plan(game, setup, result.steps));
}

TEST_CASE("the root accumulates exactly one visit per iteration") {
  const TrackModel track = TrackModel::build(toy_spec());
  const DiscreteGame game(&track, toy_vehicle(), DiscreteGameConfig{});
  PlanningSetup setup;
  setup.states = {toy_state(0, 1, 0), toy_state(1, 2, 1)};
  setup.team_of = {0, 1};
  setup.player_ids = {0, 1};
  MctsParams params;
  params.seed = 12;
  params.iterations = 128;
  CHECK(plan(game, setup, params).root_visits == 128);
  params.iterations = 256;
  CHECK(plan(game, setup, params).root_visits == 256);
}

TEST_CASE("root values are the running mean of rollout scores") {
  const TrackModel track = TrackModel::build(toy_spec());
  const DiscreteGame game(&track, toy_vehicle(), DiscreteGameConfig{});
  PlanningSetup setup;
  setup.states = {toy_state(0, 1, 1), toy_state(1, 2, 0)};
  setup.team_of = {0, 1};
  setup.player_ids = {0, 1};
  MctsParams params;
  params.seed = 21;
  params.iterations = 40;
  std::vector<std::vector<double>> rollouts;
  const MctsPlan result = plan(game, setup, params, &rollouts);
  REQUIRE(rollouts.size() == 40);
  REQUIRE(result.root_means.size() == 2);
  for (std::size_t seat = 0; seat < 2; ++seat) {
    double sum = 0.0;
    for (const auto& rewards : rollouts) sum += rewards[seat];
    CHECK(result.root_means[seat] == doctest::Approx(sum / 40.0).epsilon(1e-12));
  }
}

TEST_CASE("an all-pruned root is served by the forced fallback, and says so") {
  TrackSpec spec;
  spec.name = "hairpin";
  spec.lane_count = 4;
  spec.lane_width = 2.0;
  spec.track_half_width = 4.5;
  spec.lane_change_limit = 2;
  spec.checkpoint_spacing = 12.0;
  spec.segments = {SegmentSpec::straight(20.0),
                   SegmentSpec::arc(10.0, kPi, ArcDirection::kLeft)};
  const TrackModel track = TrackModel::build(spec);
  VehicleParams vehicle;
  vehicle.b = 6.0;
  const DiscreteGame game(&track, vehicle, DiscreteGameConfig{});

  PlanningSetup setup;
  setup.states = {toy_state(0, 2, 11)};  // ~23 m/s entering the hairpin
  setup.states[0].k = 1;
  setup.team_of = {0};
  setup.player_ids = {0};
  MctsParams params;
  params.iterations = 50;
  params.seed = 8;
  const MctsPlan result = plan(game, setup, params);
  CHECK(result.forced_fallback);
  CHECK(audit_plan(game, setup, result.steps));
}

}  // TEST_SUITE
