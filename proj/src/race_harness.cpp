#include "teamrace/race_harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "teamrace/util.hpp"

namespace teamrace {

namespace {

constexpr std::array<int, 2> kTeamASlots[6] = {{{0, 1}}, {{0, 2}}, {{0, 3}},
                                               {{1, 2}}, {{1, 3}}, {{2, 3}}};

std::uint64_t race_config_hash(const RaceSetup& setup, const RaceParams& params) {
  Fnv1a64 h;
  h.update_value(setup.track.geometry_hash());
  h.update_value(vehicle_hash(setup.vehicle));
  h.update_value(params.grid_id);
  h.update_value(params.seed);
  h.update_value(static_cast<int>(params.team_a.kind));
  h.update_value(static_cast<int>(params.team_b.kind));
  h.update_value(params.team_a.mcts.iterations);
  h.update_value(params.team_b.mcts.iterations);
  h.update_value(params.dt);
  h.update_value(params.time_limit);
  h.update_value(params.schedule.low_level_period);
  h.update_value(params.schedule.high_level_period);
  return h.digest();
}

std::string format_number(double v) {
  std::ostringstream out;
  out << std::setprecision(12) << v;
  return out.str();
}

}  // namespace

// Disc-vs-disc contact pass over the freshly stepped states. Pairs are
// handled in ascending (i, j) order: overlapping discs are pushed apart
// equally along the contact normal and the closing velocity component is
// shared inelastically, then re-projected onto each kart's own heading
// (headings themselves never jump).
std::vector<std::pair<int, int>> resolve_disc_contacts(std::vector<ContinuousState>& states,
                                                       const std::vector<bool>& racing,
                                                       double radius) {
  std::vector<std::pair<int, int>> contacts;
  const double diameter = 2.0 * radius;
  for (int i = 0; i < static_cast<int>(states.size()); ++i) {
    if (!racing[static_cast<std::size_t>(i)]) continue;
    for (int j = i + 1; j < static_cast<int>(states.size()); ++j) {
      if (!racing[static_cast<std::size_t>(j)]) continue;
      ContinuousState& si = states[static_cast<std::size_t>(i)];
      ContinuousState& sj = states[static_cast<std::size_t>(j)];
      Vec2 delta = sj.position - si.position;
      const double dist = norm(delta);
      if (dist >= diameter) continue;
      const Vec2 n = dist > 1e-9 ? delta * (1.0 / dist) : Vec2{1.0, 0.0};
      const double push = 0.5 * (diameter - dist);
      si.position += n * -push;
      sj.position += n * push;
      const Vec2 vi = heading_dir(si.heading) * si.velocity;
      const Vec2 vj = heading_dir(sj.heading) * sj.velocity;
      const double un_i = dot(vi, n);
      const double un_j = dot(vj, n);
      if (un_i - un_j > 0.0) {  // approaching
        const double shared = 0.5 * (un_i + un_j);
        const Vec2 vi2 = vi + n * (shared - un_i);
        const Vec2 vj2 = vj + n * (shared - un_j);
        si.velocity = std::max(0.0, dot(vi2, heading_dir(si.heading)));
        sj.velocity = std::max(0.0, dot(vj2, heading_dir(sj.heading)));
      }
      contacts.emplace_back(i, j);
    }
  }
  return contacts;
}

namespace {

void hash_event(Fnv1a64& hash, const TraceEvent& ev) {
  hash.update_value(ev.tick);
  hash.update_value(static_cast<int>(ev.kind));
  hash.update_value(ev.player);
  hash.update_value(ev.other);
  hash.update_value(ev.checkpoint);
}

template <typename T>
void write_raw(std::ostream& out, const T& v) {
  static_assert(std::is_trivially_copyable_v<T>);
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ConfigError("trace file truncated");
  return v;
}

void write_state(std::ostream& out, const ContinuousState& s) {
  write_raw(out, s.position.x);
  write_raw(out, s.position.y);
  write_raw(out, s.velocity);
  write_raw(out, s.heading);
  write_raw(out, s.accumulated_turn);
  write_raw(out, s.tire_wear);
  write_raw(out, s.lane_change_count);
  write_raw(out, s.last_checkpoint);
  write_raw(out, s.elapsed_time);
  write_raw(out, s.straight_section);
}

ContinuousState read_state(std::istream& in) {
  ContinuousState s;
  s.position.x = read_raw<double>(in);
  s.position.y = read_raw<double>(in);
  s.velocity = read_raw<double>(in);
  s.heading = read_raw<double>(in);
  s.accumulated_turn = read_raw<double>(in);
  s.tire_wear = read_raw<double>(in);
  s.lane_change_count = read_raw<int>(in);
  s.last_checkpoint = read_raw<int>(in);
  s.elapsed_time = read_raw<double>(in);
  s.straight_section = read_raw<int>(in);
  return s;
}

constexpr char kTraceMagic[8] = {'T', 'R', 'A', 'C', 'E', 'v', '0', '1'};

}  // namespace

std::uint64_t vehicle_hash(const VehicleParams& p) {
  Fnv1a64 h;
  h.update_value(p.a);
  h.update_value(p.b);
  h.update_value(p.v_max);
  h.update_value(p.a_max);
  h.update_value(p.a_min);
  h.update_value(p.wear_rate);
  h.update_value(p.vehicle_radius);
  h.update_value(p.L_straight);
  h.update_value(p.L_curve);
  return h.digest();
}

RaceSetup make_race_setup(const TrackSpec& track_spec, const VehicleParams& vehicle,
                          const DiscreteGameConfig& game_config) {
  track_spec.validate();
  vehicle.validate();
  return RaceSetup(TrackModel::build(track_spec), vehicle, game_config);
}

std::array<ContinuousState, 4> make_grid(int grid_id, const TrackModel& track) {
  const TrackSpec& spec = track.spec();
  if (spec.lane_count < 2) {
    throw ConfigError("grid placement needs at least two lanes, track has " +
                      std::to_string(spec.lane_count));
  }
  if (grid_id < 1 || grid_id > 6) {
    throw ConfigError("grid id must be in 1..6, got " + std::to_string(grid_id));
  }
  const int lane_left = (spec.lane_count + 1) / 2;  // the two middle lanes
  const int lane_right = lane_left + 1;
  struct Slot {
    double s;
    int lane;
  };
  const std::array<Slot, 4> slots{{{10.0, lane_left},  // slot 0: front row
                                   {10.0, lane_right},
                                   {0.0, lane_left},  // slot 2: rear row
                                   {0.0, lane_right}}};

  const std::array<int, 2>& a_slots = kTeamASlots[grid_id - 1];
  std::array<int, 4> player_slot{};
  player_slot[0] = a_slots[0];
  player_slot[1] = a_slots[1];
  int next = 2;
  for (int slot = 0; slot < 4; ++slot) {
    if (slot != a_slots[0] && slot != a_slots[1]) player_slot[static_cast<std::size_t>(next++)] = slot;
  }

  std::array<ContinuousState, 4> grid{};
  for (int i = 0; i < 4; ++i) {
    const Slot& slot = slots[static_cast<std::size_t>(player_slot[static_cast<std::size_t>(i)])];
    ContinuousState s;
    s.position = track.offset_point(slot.s, track.lane_offset(slot.lane));
    s.heading = track.pose_at(slot.s).heading;
    s.last_checkpoint = track.last_checkpoint(s.position, 0);
    s.straight_section = track.straight_section_at(slot.s);
    grid[static_cast<std::size_t>(i)] = s;
  }
  return grid;
}

RaceResult run_race(const RaceSetup& setup, const RaceParams& params, TraceFile* trace) {
  const TrackModel& track = setup.track;
  if (params.dt <= 0.0) throw ConfigError("race dt must be positive");
  if (params.time_limit <= 0.0) throw ConfigError("race time limit must be positive");
  params.schedule.validate();
  params.rewards.validate();

  // The track defines the lane-change allowance; the rule set mirrors it.
  RuleParams rules = params.rules;
  rules.lane_change_limit = track.spec().lane_change_limit;
  rules.validate();

  RaceResult result;
  result.seed = params.seed;
  result.grid_id = params.grid_id;

  const std::array<ContinuousState, 4> grid = make_grid(params.grid_id, track);
  std::vector<ContinuousState> states(grid.begin(), grid.end());
  std::vector<bool> racing(4, true);
  const std::vector<int> team_of{0, 0, 1, 1};
  std::vector<PassageLog> passages(4);

  std::array<std::unique_ptr<Controller>, 4> controllers;
  for (int i = 0; i < 4; ++i) {
    const ControllerSpec& spec = i < 2 ? params.team_a : params.team_b;
    controllers[static_cast<std::size_t>(i)] = std::make_unique<Controller>(
        spec, params.schedule, i, &track, &setup.vehicle, &setup.game, &setup.line, params.seed);
  }

  RulesAuditor auditor(&track, rules, setup.vehicle.vehicle_radius, 4);
  for (int i = 0; i < 4; ++i) auditor.update_lane_bookkeeping(i, states[static_cast<std::size_t>(i)]);

  const std::uint64_t config_hash = race_config_hash(setup, params);
  Fnv1a64 hash;
  hash.update_value(config_hash);
  if (trace != nullptr) trace->config_hash = config_hash;

  const int tau = track.checkpoint_count();
  const double spacing = track.spec().checkpoint_spacing;
  std::vector<int> crossing_count(static_cast<std::size_t>(tau) + 1, 0);
  std::array<double, 4> lane_dev_sum{};
  std::array<double, 4> vel_dev_sum{};
  std::array<int, 4> dev_samples{};
  std::vector<int> finish_seq;
  std::array<bool, 4> finished{};
  std::array<double, 4> finish_times;
  finish_times.fill(std::numeric_limits<double>::infinity());

  const double dt = params.dt;
  double time = 0.0;
  long tick = 0;
  bool aborted = false;
  std::string diagnostic;

  auto record_event = [&](const TraceEvent& ev) {
    hash_event(hash, ev);
    if (trace != nullptr) trace->events.push_back(ev);
  };

  while (time < params.time_limit - 1e-9 &&
         std::any_of(racing.begin(), racing.end(), [](bool r) { return r; })) {
    // Every controller sees the same pre-tick world; evaluation order within
    // the tick cannot leak between players.
    const WorldSnapshot snap{time, states, passages, racing, team_of};
    std::array<ControlInput, 4> controls{};
    try {
      for (int i = 0; i < 4; ++i) {
        if (!racing[static_cast<std::size_t>(i)]) continue;
        controls[static_cast<std::size_t>(i)] = clamp_control(
            states[static_cast<std::size_t>(i)],
            controllers[static_cast<std::size_t>(i)]->step(snap, tick), setup.vehicle);
      }
    } catch (const std::exception& e) {
      aborted = true;
      diagnostic = "controller failure at t=" + format_number(time) + ": " + e.what();
      break;
    }

    for (int i = 0; i < 4; ++i) {
      if (racing[static_cast<std::size_t>(i)]) {
        states[static_cast<std::size_t>(i)] =
            step(states[static_cast<std::size_t>(i)], controls[static_cast<std::size_t>(i)], dt,
                 setup.vehicle);
      }
    }
    const double now = time + dt;

    const auto contacts = resolve_disc_contacts(states, racing, setup.vehicle.vehicle_radius);
    for (const auto& [i, j] : contacts) {
      record_event({tick, TraceEventKind::kContact, i, j, 0, 0.0});
    }

    // Checkpoint crossings, processed leader-first within the tick.
    struct Crossing {
      int player;
      int checkpoint;
      double past;  // distance beyond the line, for same-tick ordering
    };
    std::vector<Crossing> crossings;
    for (int i = 0; i < 4; ++i) {
      if (!racing[static_cast<std::size_t>(i)]) continue;
      ContinuousState& s = states[static_cast<std::size_t>(i)];
      auditor.update_lane_bookkeeping(i, s);
      const int r_prev = s.last_checkpoint;
      int r_now = track.last_checkpoint(s.position, r_prev);
      // Karts cover under a metre per tick, so a multi-checkpoint jump means
      // the projection wrapped across the start line (a kart shoved backward
      // over it would otherwise bank the whole lap), not real progress.
      if (r_now - r_prev > 2) r_now = r_prev;
      if (r_now > r_prev) {
        const double arc = track.project(s.position).arc_length;
        for (int c = r_prev + 1; c <= r_now; ++c) {
          crossings.push_back({i, c, arc - static_cast<double>(c) * spacing});
        }
        s.last_checkpoint = r_now;
      }
    }
    std::sort(crossings.begin(), crossings.end(), [](const Crossing& a, const Crossing& b) {
      if (a.checkpoint != b.checkpoint) return a.checkpoint < b.checkpoint;
      if (a.past != b.past) return a.past > b.past;
      return a.player < b.player;
    });
    for (const Crossing& c : crossings) {
      const std::size_t pi = static_cast<std::size_t>(c.player);
      passages[pi].times.push_back(now);
      const int rank = ++crossing_count[static_cast<std::size_t>(c.checkpoint)];
      const auto wp = controllers[pi]->waypoint_for_checkpoint(c.checkpoint);
      if (wp.has_value()) {
        lane_dev_sum[pi] += distance(states[pi].position, wp->position);
        vel_dev_sum[pi] += std::abs(states[pi].velocity - wp->target_velocity);
        dev_samples[pi] += 1;
      }
      double reward_total = 0.0;
      if (trace != nullptr) {
        const PlanWaypoint target =
            wp.has_value() ? *wp : setup.line.waypoints[static_cast<std::size_t>(c.checkpoint - 1)];
        const auto proj = track.project(states[pi].position);
        const int ego_lane = track.nearest_lane(proj.lateral_offset);
        const CheckpointRewards cr =
            checkpoint_rewards(states[pi], rank, now, params.time_limit, target, ego_lane,
                               c.checkpoint - 1, c.checkpoint, params.rewards);
        reward_total = cr.total();
      }
      record_event({tick, TraceEventKind::kCheckpoint, c.player, -1, c.checkpoint, reward_total});
      if (c.checkpoint == tau) {
        finished[pi] = true;
        finish_times[pi] = now;
        finish_seq.push_back(c.player);
        record_event({tick, TraceEventKind::kFinish, c.player, -1, tau, now});
      }
    }
    for (const Crossing& c : crossings) {
      if (c.checkpoint == tau) racing[static_cast<std::size_t>(c.player)] = false;  // parked
    }

    const std::size_t events_before = auditor.log().events.size();
    auditor.observe(states, racing, now);
    for (std::size_t e = events_before; e < auditor.log().events.size(); ++e) {
      const ViolationEvent& v = auditor.log().events[e];
      record_event({tick, TraceEventKind::kViolation, v.player, v.other_player,
                    static_cast<int>(v.kind), v.time});
    }

    hash.update_value(tick);
    for (int i = 0; i < 4; ++i) {
      const ContinuousState& s = states[static_cast<std::size_t>(i)];
      hash.update_value(s.position.x);
      hash.update_value(s.position.y);
      hash.update_value(s.velocity);
      hash.update_value(s.heading);
      hash.update_value(controls[static_cast<std::size_t>(i)].accel);
      hash.update_value(controls[static_cast<std::size_t>(i)].yaw_rate);
    }

    if (trace != nullptr) {
      TraceTick record;
      record.time = now;
      for (int i = 0; i < 4; ++i) {
        const std::size_t pi = static_cast<std::size_t>(i);
        record.states[pi] = states[pi];
        record.controls[pi] = controls[pi];
        if (racing[pi] || finished[pi]) {
          std::vector<bool> others_active = racing;
          others_active[pi] = false;
          record.rewards[pi] = racing[pi]
                                   ? step_rewards(states[pi],
                                                  lidar_scan(states[pi], states, others_active,
                                                             track, setup.vehicle.vehicle_radius),
                                                  params.rewards, track, setup.vehicle)
                                   : StepRewards{};
        }
      }
      trace->ticks.push_back(std::move(record));
      if (tick % params.schedule.high_level_period == 0) {
        for (int i = 0; i < 4; ++i) {
          const MctsPlan* plan = controllers[static_cast<std::size_t>(i)]->active_plan();
          if (plan != nullptr && !plan->ego_waypoints.empty()) {
            trace->plans.push_back({tick, i, plan->ego_waypoints});
          }
        }
      }
    }

    time = now;
    ++tick;
  }

  result.trace_hash = hash.digest();
  result.finished = finished;
  result.finish_times = finish_times;

  const ViolationLog& log = auditor.log();
  for (int i = 0; i < 4; ++i) {
    const std::size_t team = static_cast<std::size_t>(team_of[static_cast<std::size_t>(i)]);
    result.collisions_at_fault[team] += log.collisions_at_fault[static_cast<std::size_t>(i)];
    result.illegal_lane_changes[team] += log.illegal_lane_changes[static_cast<std::size_t>(i)];
  }
  result.safety = safety_score(log);
  for (int team = 0; team < 2; ++team) {
    double lane_sum = 0.0;
    double vel_sum = 0.0;
    int samples = 0;
    for (int i = 2 * team; i < 2 * team + 2; ++i) {
      lane_sum += lane_dev_sum[static_cast<std::size_t>(i)];
      vel_sum += vel_dev_sum[static_cast<std::size_t>(i)];
      samples += dev_samples[static_cast<std::size_t>(i)];
    }
    if (samples > 0) {
      result.lane_deviation[static_cast<std::size_t>(team)] = lane_sum / samples;
      result.velocity_deviation[static_cast<std::size_t>(team)] = vel_sum / samples;
    }
  }

  if (aborted) {
    result.aborted = true;
    result.diagnostic = diagnostic;
    log_error(diagnostic);
    return result;
  }

  // Classification: finishers in crossing order, then DNFs by distance made.
  std::vector<int> order = finish_seq;
  std::vector<int> dnf;
  for (int i = 0; i < 4; ++i) {
    if (!finished[static_cast<std::size_t>(i)]) dnf.push_back(i);
  }
  std::sort(dnf.begin(), dnf.end(), [&](int lhs, int rhs) {
    const ContinuousState& a = states[static_cast<std::size_t>(lhs)];
    const ContinuousState& b = states[static_cast<std::size_t>(rhs)];
    if (a.last_checkpoint != b.last_checkpoint) return a.last_checkpoint > b.last_checkpoint;
    const double sa = track.project(a.position).arc_length;
    const double sb = track.project(b.position).arc_length;
    if (sa != sb) return sa > sb;
    return lhs < rhs;
  });
  order.insert(order.end(), dnf.begin(), dnf.end());
  result.finish_order = order;
  result.score = score_finish(order, finished);
  return result;
}

namespace {

RaceRow run_scheduled_race(const RaceSetup& setup, const std::vector<TournamentPairing>& pairings,
                           int races_per_pairing, std::uint64_t base_seed,
                           const RaceParams& base_params, int index) {
  const int pairing_index = index / races_per_pairing;
  const int race_index = index % races_per_pairing;
  const TournamentPairing& pairing = pairings[static_cast<std::size_t>(pairing_index)];
  RaceParams params = base_params;
  params.team_a = pairing.team_a;
  params.team_b = pairing.team_b;
  params.grid_id = race_index % 6 + 1;
  params.seed = base_seed + static_cast<std::uint64_t>(pairing_index) * 1000003ull +
                static_cast<std::uint64_t>(race_index);
  RaceRow row;
  row.pairing = pairing.name;
  row.result = run_race(setup, params);
  return row;
}

std::vector<PairingAggregate> aggregate_rows(const std::vector<TournamentPairing>& pairings,
                                             const std::vector<RaceRow>& rows,
                                             int races_per_pairing) {
  std::vector<PairingAggregate> aggregates;
  for (std::size_t p = 0; p < pairings.size(); ++p) {
    PairingAggregate agg;
    agg.pairing = pairings[p].name;
    for (int r = 0; r < races_per_pairing; ++r) {
      const RaceResult& res = rows[p * static_cast<std::size_t>(races_per_pairing) +
                                   static_cast<std::size_t>(r)]
                                  .result;
      agg.races += 1;
      if (res.aborted) {
        agg.draws += 1;
        continue;
      }
      if (res.score.winner == 0) {
        agg.wins_a += 1;
      } else if (res.score.winner == 1) {
        agg.wins_b += 1;
      } else {
        agg.draws += 1;
      }
      agg.points_a += res.score.team_points[0];
      agg.points_b += res.score.team_points[1];
      agg.avg_collisions_a += res.collisions_at_fault[0];
      agg.avg_collisions_b += res.collisions_at_fault[1];
      agg.avg_illegal_a += res.illegal_lane_changes[0];
      agg.avg_illegal_b += res.illegal_lane_changes[1];
      agg.safety_a += res.safety[0];
      agg.safety_b += res.safety[1];
      agg.lane_dev_a += res.lane_deviation[0];
      agg.lane_dev_b += res.lane_deviation[1];
      agg.vel_dev_a += res.velocity_deviation[0];
      agg.vel_dev_b += res.velocity_deviation[1];
    }
    if (agg.races > 0) {
      const double inv = 1.0 / agg.races;
      agg.avg_collisions_a *= inv;
      agg.avg_collisions_b *= inv;
      agg.avg_illegal_a *= inv;
      agg.avg_illegal_b *= inv;
      agg.safety_a *= inv;
      agg.safety_b *= inv;
      agg.lane_dev_a *= inv;
      agg.lane_dev_b *= inv;
      agg.vel_dev_a *= inv;
      agg.vel_dev_b *= inv;
    }
    aggregates.push_back(agg);
  }
  return aggregates;
}

void check_tournament_args(const std::vector<TournamentPairing>& pairings, int races_per_pairing) {
  if (pairings.empty()) throw ConfigError("tournament needs at least one pairing");
  if (races_per_pairing < 1) throw ConfigError("races per pairing must be positive");
  if (races_per_pairing % 6 != 0) {
    throw ConfigError("races per pairing must be a multiple of 6 so every grid permutation "
                      "appears equally often, got " +
                      std::to_string(races_per_pairing));
  }
}

}  // namespace

TournamentResult run_tournament_serial(const RaceSetup& setup,
                                       const std::vector<TournamentPairing>& pairings,
                                       int races_per_pairing, std::uint64_t base_seed,
                                       const RaceParams& base_params) {
  check_tournament_args(pairings, races_per_pairing);
  const int total = static_cast<int>(pairings.size()) * races_per_pairing;
  TournamentResult result;
  result.rows.resize(static_cast<std::size_t>(total));
  for (int idx = 0; idx < total; ++idx) {
    result.rows[static_cast<std::size_t>(idx)] =
        run_scheduled_race(setup, pairings, races_per_pairing, base_seed, base_params, idx);
  }
  result.aggregates = aggregate_rows(pairings, result.rows, races_per_pairing);
  return result;
}

TournamentResult run_tournament(const RaceSetup& setup,
                                const std::vector<TournamentPairing>& pairings,
                                int races_per_pairing, std::uint64_t base_seed,
                                const RaceParams& base_params, int jobs) {
  check_tournament_args(pairings, races_per_pairing);
  if (jobs < 1) jobs = 1;
  const int total = static_cast<int>(pairings.size()) * races_per_pairing;
  TournamentResult result;
  result.rows.resize(static_cast<std::size_t>(total));

  // Each race writes only its own slot, so worker count and completion order
  // cannot change the output.
  bool failed = false;
  std::string failure;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs)
#endif
  for (int idx = 0; idx < total; ++idx) {
    try {
      result.rows[static_cast<std::size_t>(idx)] =
          run_scheduled_race(setup, pairings, races_per_pairing, base_seed, base_params, idx);
    } catch (const std::exception& e) {
#ifdef _OPENMP
#pragma omp critical
#endif
      {
        failed = true;
        failure = e.what();
      }
    }
  }
  if (failed) throw ConfigError("tournament race failed: " + failure);
  result.aggregates = aggregate_rows(pairings, result.rows, races_per_pairing);
  return result;
}

std::string export_csv(const TournamentResult& result) {
  std::ostringstream out;
  out << "pairing,seed,grid_id,winner_team,points_A,points_B,collisions_at_fault_A,"
         "collisions_at_fault_B,illegal_lane_changes_A,illegal_lane_changes_B,safety_A,safety_B,"
         "lane_dist_A,lane_dist_B,vel_diff_A,vel_diff_B\n";
  for (const RaceRow& row : result.rows) {
    const RaceResult& r = row.result;
    const char* winner = r.aborted            ? "aborted"
                         : r.score.winner == 0 ? "A"
                         : r.score.winner == 1 ? "B"
                                               : "draw";
    out << row.pairing << ',' << r.seed << ',' << r.grid_id << ',' << winner << ','
        << format_number(r.score.team_points[0]) << ',' << format_number(r.score.team_points[1])
        << ',' << r.collisions_at_fault[0] << ',' << r.collisions_at_fault[1] << ','
        << r.illegal_lane_changes[0] << ',' << r.illegal_lane_changes[1] << ','
        << format_number(r.safety[0]) << ',' << format_number(r.safety[1]) << ','
        << format_number(r.lane_deviation[0]) << ',' << format_number(r.lane_deviation[1]) << ','
        << format_number(r.velocity_deviation[0]) << ',' << format_number(r.velocity_deviation[1])
        << '\n';
  }
  return out.str();
}

void save_trace(const TraceFile& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open trace file for writing: " + path);
  out.write(kTraceMagic, sizeof(kTraceMagic));
  write_raw(out, trace.config_hash);
  write_raw(out, static_cast<std::uint64_t>(trace.ticks.size()));
  for (const TraceTick& t : trace.ticks) {
    write_raw(out, t.time);
    for (int i = 0; i < 4; ++i) {
      write_state(out, t.states[static_cast<std::size_t>(i)]);
      write_raw(out, t.controls[static_cast<std::size_t>(i)].accel);
      write_raw(out, t.controls[static_cast<std::size_t>(i)].yaw_rate);
      const StepRewards& r = t.rewards[static_cast<std::size_t>(i)];
      write_raw(out, r.speed);
      write_raw(out, r.direction);
      write_raw(out, r.swerve);
      write_raw(out, r.wall_hit);
      write_raw(out, r.player_hit);
    }
  }
  write_raw(out, static_cast<std::uint64_t>(trace.events.size()));
  for (const TraceEvent& e : trace.events) {
    write_raw(out, e.tick);
    write_raw(out, static_cast<int>(e.kind));
    write_raw(out, e.player);
    write_raw(out, e.other);
    write_raw(out, e.checkpoint);
    write_raw(out, e.value);
  }
  write_raw(out, static_cast<std::uint64_t>(trace.plans.size()));
  for (const TracePlanRecord& p : trace.plans) {
    write_raw(out, p.tick);
    write_raw(out, p.player);
    write_raw(out, static_cast<std::uint64_t>(p.waypoints.size()));
    for (const PlanWaypoint& wp : p.waypoints) {
      write_raw(out, wp.checkpoint);
      write_raw(out, wp.lane);
      write_raw(out, wp.target_velocity);
      write_raw(out, wp.position.x);
      write_raw(out, wp.position.y);
      write_raw(out, wp.heading);
    }
  }
  if (!out) throw ConfigError("failed writing trace file: " + path);
}

TraceFile load_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open trace file: " + path);
  char magic[sizeof(kTraceMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kTraceMagic, sizeof(magic)) != 0) {
    throw ConfigError("not a race trace file: " + path);
  }
  TraceFile trace;
  trace.config_hash = read_raw<std::uint64_t>(in);
  const auto tick_count = read_raw<std::uint64_t>(in);
  trace.ticks.reserve(tick_count);
  for (std::uint64_t t = 0; t < tick_count; ++t) {
    TraceTick rec;
    rec.time = read_raw<double>(in);
    for (int i = 0; i < 4; ++i) {
      rec.states[static_cast<std::size_t>(i)] = read_state(in);
      rec.controls[static_cast<std::size_t>(i)].accel = read_raw<double>(in);
      rec.controls[static_cast<std::size_t>(i)].yaw_rate = read_raw<double>(in);
      StepRewards& r = rec.rewards[static_cast<std::size_t>(i)];
      r.speed = read_raw<double>(in);
      r.direction = read_raw<double>(in);
      r.swerve = read_raw<double>(in);
      r.wall_hit = read_raw<double>(in);
      r.player_hit = read_raw<double>(in);
    }
    trace.ticks.push_back(rec);
  }
  const auto event_count = read_raw<std::uint64_t>(in);
  for (std::uint64_t e = 0; e < event_count; ++e) {
    TraceEvent ev;
    ev.tick = read_raw<long>(in);
    ev.kind = static_cast<TraceEventKind>(read_raw<int>(in));
    ev.player = read_raw<int>(in);
    ev.other = read_raw<int>(in);
    ev.checkpoint = read_raw<int>(in);
    ev.value = read_raw<double>(in);
    trace.events.push_back(ev);
  }
  const auto plan_count = read_raw<std::uint64_t>(in);
  for (std::uint64_t p = 0; p < plan_count; ++p) {
    TracePlanRecord rec;
    rec.tick = read_raw<long>(in);
    rec.player = read_raw<int>(in);
    const auto n = read_raw<std::uint64_t>(in);
    for (std::uint64_t w = 0; w < n; ++w) {
      PlanWaypoint wp;
      wp.checkpoint = read_raw<int>(in);
      wp.lane = read_raw<int>(in);
      wp.target_velocity = read_raw<double>(in);
      wp.position.x = read_raw<double>(in);
      wp.position.y = read_raw<double>(in);
      wp.heading = read_raw<double>(in);
      rec.waypoints.push_back(wp);
    }
    trace.plans.push_back(std::move(rec));
  }
  return trace;
}

namespace {

struct SvgMapper {
  double min_x, min_y, max_x, max_y, scale, margin;
  double px(double x) const { return (x - min_x + margin) * scale; }
  double py(double y) const { return (max_y - y + margin) * scale; }  // y grows upward on track
  double width() const { return (max_x - min_x + 2 * margin) * scale; }
  double height() const { return (max_y - min_y + 2 * margin) * scale; }
};

void append_polyline(std::ostringstream& out, const std::vector<Vec2>& pts, const SvgMapper& m,
                     const std::string& style) {
  out << "<polyline fill=\"none\" " << style << " points=\"";
  for (const Vec2& p : pts) {
    out << std::setprecision(7) << m.px(p.x) << ',' << m.py(p.y) << ' ';
  }
  out << "\"/>\n";
}

}  // namespace

std::string render_trace_svg(const TraceFile& trace, const TrackModel& track) {
  const double w = track.spec().track_half_width;
  const double total = track.total_length();
  const double sample_step = 0.5;

  double min_x = 1e18, min_y = 1e18, max_x = -1e18, max_y = -1e18;
  for (double s = 0.0; s < total + sample_step; s += sample_step) {
    const Vec2 p = track.pose_at(std::min(s, total)).position;
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const SvgMapper m{min_x, min_y, max_x, max_y, 6.0, w + 4.0};

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << std::setprecision(7)
      << m.width() << "\" height=\"" << m.height() << "\" viewBox=\"0 0 " << m.width() << ' '
      << m.height() << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"#fafaf7\"/>\n";

  auto boundary = [&](double lateral) {
    std::vector<Vec2> pts;
    for (double s = 0.0; s < total + sample_step; s += sample_step) {
      pts.push_back(track.offset_point(std::min(s, total), lateral));
    }
    return pts;
  };
  append_polyline(out, boundary(-w), m, "stroke=\"#333333\" stroke-width=\"2\"");
  append_polyline(out, boundary(w), m, "stroke=\"#333333\" stroke-width=\"2\"");
  for (int lane = 1; lane <= track.spec().lane_count; ++lane) {
    append_polyline(out, boundary(track.lane_offset(lane)), m,
                    "stroke=\"#c8c8c8\" stroke-width=\"0.7\" stroke-dasharray=\"4 5\"");
  }
  for (int k = 1; k <= track.checkpoint_count(); ++k) {
    const Checkpoint& cp = track.checkpoint(k);
    const double s = static_cast<double>(k) * track.spec().checkpoint_spacing;
    const Vec2 a = track.offset_point(s, -w);
    const Vec2 b = track.offset_point(s, w);
    out << "<line x1=\"" << m.px(a.x) << "\" y1=\"" << m.py(a.y) << "\" x2=\"" << m.px(b.x)
        << "\" y2=\"" << m.py(b.y) << "\" stroke=\"#9db8d2\" stroke-width=\"0.8\"/>\n";
    out << "<text x=\"" << m.px(cp.position.x) << "\" y=\"" << m.py(cp.position.y)
        << "\" font-size=\"7\" fill=\"#7a8ba0\">" << k << "</text>\n";
  }

  static const char* kColors[4] = {"#d1495b", "#e98a15", "#2e6f95", "#52b69a"};
  for (int i = 0; i < 4; ++i) {
    std::vector<Vec2> path;
    path.reserve(trace.ticks.size());
    for (const TraceTick& t : trace.ticks) path.push_back(t.states[static_cast<std::size_t>(i)].position);
    if (path.empty()) continue;
    append_polyline(out, path, m,
                    "stroke=\"" + std::string(kColors[i]) + "\" stroke-width=\"1.4\"");
  }
  for (const TracePlanRecord& plan : trace.plans) {
    for (const PlanWaypoint& wp : plan.waypoints) {
      out << "<circle cx=\"" << m.px(wp.position.x) << "\" cy=\"" << m.py(wp.position.y)
          << "\" r=\"2.2\" fill=\"none\" stroke=\"" << kColors[plan.player % 4]
          << "\" stroke-opacity=\"0.35\" stroke-width=\"0.8\"/>\n";
    }
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace teamrace
