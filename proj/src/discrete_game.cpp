#include "teamrace/discrete_game.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "teamrace/util.hpp"

namespace teamrace {
namespace {
constexpr double kEps = 1e-9;
}

int velocity_bucket_count(double v_max) {
  return static_cast<int>(std::ceil(v_max / kVelocityPitch - kEps));
}

int velocity_bucket(double v, double v_max) {
  const int bucket = static_cast<int>(std::floor(v / kVelocityPitch));
  return std::clamp(bucket, 0, velocity_bucket_count(v_max) - 1);
}

double velocity_bucket_mid(int bucket, double v_max) {
  return std::min((bucket + 0.5) * kVelocityPitch, v_max);
}

int wear_bucket(double e) {
  const int bucket = static_cast<int>(std::floor(e / kWearPitch));
  return std::clamp(bucket, 0, 9);
}

double wear_bucket_mid(int bucket) { return (bucket + 0.5) * kWearPitch; }

int quantize_time_tenths(double seconds) {
  return static_cast<int>(std::floor(seconds / kTimeQuantum + 0.5));
}

std::optional<double> min_travel_time(double d, double v_from, double v_to, double v_star,
                                      double a, double b) {
  if (v_to > v_star + kEps) return std::nullopt;
  // Direct reachability between the endpoint speeds within d.
  if (v_to > v_from) {
    if ((v_to * v_to - v_from * v_from) / (2.0 * a) > d + kEps) return std::nullopt;
  } else if (v_from > v_to) {
    if ((v_from * v_from - v_to * v_to) / (2.0 * b) > d + kEps) return std::nullopt;
  }
  const double ramp_in =
      v_star >= v_from ? (v_star * v_star - v_from * v_from) / (2.0 * a)
                       : (v_from * v_from - v_star * v_star) / (2.0 * b);
  const double ramp_out = (v_star * v_star - v_to * v_to) / (2.0 * b);
  if (ramp_in + ramp_out <= d + kEps) {
    const double t_in = v_star >= v_from ? (v_star - v_from) / a : (v_from - v_star) / b;
    const double cruise = std::max(0.0, d - ramp_in - ramp_out);
    return t_in + cruise / v_star + (v_star - v_to) / b;
  }
  if (v_star >= v_from) {
    // Too short to reach the cap: accelerate to a peak below v_star, then brake.
    const double peak_sq =
        (2.0 * d * a * b + b * v_from * v_from + a * v_to * v_to) / (a + b);
    const double peak = std::sqrt(std::max(peak_sq, 0.0));
    return (peak - v_from) / a + (peak - v_to) / b;
  }
  // Entering above the cap with no room to scrub speed off: ruled out.
  return std::nullopt;
}

double terminal_score(const std::vector<double>& final_times, int player,
                      const std::vector<int>& team_of, double zeta) {
  const int n = static_cast<int>(final_times.size());
  const int my_team = team_of[static_cast<std::size_t>(player)];
  int team_size = 0;
  double teammate_sum = 0.0;
  double opponent_sum = 0.0;
  for (int p = 0; p < n; ++p) {
    if (team_of[static_cast<std::size_t>(p)] == my_team) {
      ++team_size;
      if (p != player) teammate_sum += final_times[static_cast<std::size_t>(p)];
    } else {
      opponent_sum += final_times[static_cast<std::size_t>(p)];
    }
  }
  const int opponents = n - team_size;
  double score = final_times[static_cast<std::size_t>(player)] + zeta * teammate_sum;
  if (opponents > 0)
    score -= (1.0 + zeta * (team_size - 1)) * opponent_sum / opponents;
  return score;
}

std::vector<int> turn_order(const std::vector<DiscreteState>& states) {
  std::vector<int> order(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int lhs, int rhs) {
    const DiscreteState& sl = states[static_cast<std::size_t>(lhs)];
    const DiscreteState& sr = states[static_cast<std::size_t>(rhs)];
    if (sl.t_tenths != sr.t_tenths) return sl.t_tenths < sr.t_tenths;
    return sl.player < sr.player;
  });
  return order;
}

DiscreteGame::DiscreteGame(const TrackModel* track, const VehicleParams& vehicle,
                           const DiscreteGameConfig& config)
    : track_(track), vehicle_(vehicle), config_(config) {
  if (config_.horizon < 1) throw ConfigError("horizon must be >= 1");
  if (!(config_.zeta >= 0.0 && config_.zeta <= 1.0))
    throw ConfigError("zeta must lie in [0, 1]");
  v_bucket_count_ = velocity_bucket_count(vehicle_.v_max);
  const int lanes = lane_count();
  const int legs = track_->checkpoint_count();
  distance_table_.assign(static_cast<std::size_t>(legs * lanes * lanes), 0.0);
  for (int k = 0; k < legs; ++k) {
    const TrackLeg& leg = track_->leg(k);
    for (int from = 1; from <= lanes; ++from) {
      for (int to = 1; to <= lanes; ++to) {
        double d;
        if (leg.straight) {
          const double lateral = track_->spec().lane_width * std::abs(to - from);
          d = std::sqrt(lateral * lateral + leg.chord * leg.chord);
        } else {
          const double r_from = track_->leg_lane_radius(k, false, from);
          const double r_to = track_->leg_lane_radius(k, true, to);
          d = 0.5 * (r_from + r_to) * leg.central_angle;
        }
        distance_table_[static_cast<std::size_t>((k * lanes + (from - 1)) * lanes + (to - 1))] = d;
      }
    }
  }
}

DiscreteState DiscreteGame::discretize(const ContinuousState& state, int player) const {
  DiscreteState s;
  s.player = player;
  s.k = state.last_checkpoint;
  s.lane = track_->lane_id(state.position);
  s.v_bucket = velocity_bucket(state.velocity, vehicle_.v_max);
  s.e_bucket = wear_bucket(state.tire_wear);
  s.lane_changes = state.lane_change_count;
  s.t_tenths = quantize_time_tenths(state.elapsed_time);
  return s;
}

double DiscreteGame::travel_distance(int k, int lane_from, int lane_to) const {
  const int lanes = lane_count();
  return distance_table_.at(
      static_cast<std::size_t>((k * lanes + (lane_from - 1)) * lanes + (lane_to - 1)));
}

bool DiscreteGame::checkpoint_on_straight(int k) const {
  if (k == 0) return track_->on_straight(0.0);
  return track_->checkpoint(k).on_straight;
}

int DiscreteGame::section_of_checkpoint(int k) const {
  if (k == 0) return track_->straight_section_at(0.0);
  return track_->checkpoint(k).straight_section_id;
}

double DiscreteGame::max_allowed_velocity(double wear, int k_next, int lane) const {
  if (checkpoint_on_straight(k_next)) return vehicle_.v_max;
  const double radius =
      track_->checkpoint(k_next).lane_radii.at(static_cast<std::size_t>(lane - 1));
  return std::min(std::sqrt(allowed_lateral_accel(wear, vehicle_) * radius), vehicle_.v_max);
}

double DiscreteGame::tire_wear_increment(int k, int lane_from, int lane_to, double d,
                                         double v_target) const {
  const TrackLeg& leg = track_->leg(k);
  if (leg.straight) return d * vehicle_.L_straight;
  const double r_from = track_->leg_lane_radius(k, false, lane_from);
  const double r_to = track_->leg_lane_radius(k, true, lane_to);
  return 2.0 * d * vehicle_.L_curve * v_target * v_target / (r_from + r_to);
}

bool DiscreteGame::lane_change_allowed(const DiscreteState& s, int target_lane) const {
  if (target_lane == s.lane) return true;
  const int sec_now = section_of_checkpoint(s.k);
  const int sec_next = section_of_checkpoint(s.k + 1);
  if (sec_now < 0 || sec_now != sec_next) return true;  // counter resets anyway
  return s.lane_changes + 1 <= track_->spec().lane_change_limit;
}

std::optional<ActionOption> DiscreteGame::evaluate_action(
    const DiscreteState& s, const DiscreteAction& action,
    const std::vector<LaneOccupancy>& occupied) const {
  if (action.target_lane < 1 || action.target_lane > lane_count()) return std::nullopt;
  if (!lane_change_allowed(s, action.target_lane)) return std::nullopt;
  const double wear = wear_bucket_mid(s.e_bucket);
  const double v_star = max_allowed_velocity(wear, s.k + 1, action.target_lane);
  const double v_from = velocity_bucket_mid(s.v_bucket, vehicle_.v_max);
  const double v_to = velocity_bucket_mid(action.target_v_bucket, vehicle_.v_max);
  const double d = travel_distance(s.k, s.lane, action.target_lane);
  const std::optional<double> dt = min_travel_time(d, v_from, v_to, v_star, vehicle_.a, vehicle_.b);
  if (!dt) return std::nullopt;
  const int arrival = quantize_time_tenths(seconds_of_tenths(s.t_tenths) + *dt);
  for (const LaneOccupancy& slot : occupied) {
    if (slot.lane != action.target_lane) continue;
    const double gap = std::abs(seconds_of_tenths(arrival - slot.t_tenths));
    if (gap < config_.collision_time_window - kEps) return std::nullopt;
  }
  ActionOption option;
  option.action = action;
  option.dt = *dt;
  option.de = tire_wear_increment(s.k, s.lane, action.target_lane, d, v_to);
  return option;
}

std::vector<ActionOption> DiscreteGame::enumerate_actions(
    const DiscreteState& s, const std::vector<LaneOccupancy>& occupied) const {
  std::vector<ActionOption> options;
  for (int lane = 1; lane <= lane_count(); ++lane) {
    for (int bucket = 0; bucket < v_bucket_count_; ++bucket) {
      const std::optional<ActionOption> option = evaluate_action(s, {lane, bucket}, occupied);
      if (option) options.push_back(*option);
    }
  }
  if (!options.empty()) return options;

  // Nothing survives: hold the lane and brake as hard as the leg allows. This
  // ignores co-arrival risk on purpose; the planner sees the forced flag.
  const double d = travel_distance(s.k, s.lane, s.lane);
  const double v_from = velocity_bucket_mid(s.v_bucket, vehicle_.v_max);
  const double reach_sq = v_from * v_from - 2.0 * vehicle_.b * d;
  ActionOption forced;
  forced.forced = true;
  forced.action.target_lane = s.lane;
  if (reach_sq > 0.0) {
    const double v_arr = std::sqrt(reach_sq);
    forced.action.target_v_bucket = velocity_bucket(v_arr, vehicle_.v_max);
    forced.dt = (v_from - v_arr) / vehicle_.b;
  } else {
    // Braking stalls short of the checkpoint; finish the leg from rest.
    const double stop_dist = v_from * v_from / (2.0 * vehicle_.b);
    const double remainder = std::max(d - stop_dist, 0.0);
    const double v_arr = std::sqrt(2.0 * vehicle_.a * remainder);
    forced.action.target_v_bucket = velocity_bucket(v_arr, vehicle_.v_max);
    forced.dt = v_from / vehicle_.b + (remainder > 0.0 ? std::sqrt(2.0 * remainder / vehicle_.a) : 0.0);
  }
  const double v_to = velocity_bucket_mid(forced.action.target_v_bucket, vehicle_.v_max);
  forced.de = tire_wear_increment(s.k, s.lane, s.lane, d, v_to);
  return {forced};
}

DiscreteState DiscreteGame::apply_action(const DiscreteState& s, const ActionOption& option) const {
  DiscreteState next = s;
  next.k = s.k + 1;
  next.lane = option.action.target_lane;
  next.v_bucket = option.action.target_v_bucket;
  next.t_tenths = quantize_time_tenths(seconds_of_tenths(s.t_tenths) + option.dt);
  next.e_bucket = wear_bucket(wear_bucket_mid(s.e_bucket) + option.de);
  next.lane_changes = update_lane_change_count(section_of_checkpoint(s.k), s.lane,
                                               s.lane_changes, section_of_checkpoint(s.k + 1),
                                               option.action.target_lane);
  return next;
}

}  // namespace teamrace
