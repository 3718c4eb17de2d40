#pragma once
#include <optional>
#include <vector>

#include "teamrace/racing_rules.hpp"
#include "teamrace/track_model.hpp"
#include "teamrace/vehicle_dynamics.hpp"

namespace teamrace {

// Uniform bucket grids shared by the whole discrete layer.
inline constexpr double kVelocityPitch = 2.0;   // [m/s]
inline constexpr double kWearPitch = 0.1;
inline constexpr double kTimeQuantum = 0.1;     // [s]

int velocity_bucket_count(double v_max);
int velocity_bucket(double v, double v_max);
// Bucket midpoint, clamped so the representative never exceeds v_max.
double velocity_bucket_mid(int bucket, double v_max);
int wear_bucket(double e);
double wear_bucket_mid(int bucket);
// Round to the nearest 0.1 s, ties upward; stored as integer tenths.
int quantize_time_tenths(double seconds);
inline double seconds_of_tenths(int tenths) { return tenths * kTimeQuantum; }

struct DiscreteState {
  int player = 0;
  int k = 0;              // last passed checkpoint (0 = start line)
  int lane = 1;
  int v_bucket = 0;
  int lane_changes = 0;
  int e_bucket = 0;
  int t_tenths = 0;       // quantized elapsed time
};

struct DiscreteAction {
  int target_lane = 1;
  int target_v_bucket = 0;
};

// One enumerated (action, cost) candidate.
struct ActionOption {
  DiscreteAction action;
  double dt = 0.0;  // leg traversal time [s]
  double de = 0.0;  // tire-wear increment
  bool forced = false;
};

// A slot already claimed at the destination checkpoint by a player that
// moved earlier in the turn order.
struct LaneOccupancy {
  int lane = 1;
  int t_tenths = 0;
};

struct DiscreteGameConfig {
  double zeta = 1.0;      // teammate weight in the terminal score
  int horizon = 8;        // checkpoints ahead of the ego
  double nearby_radius = 25.0;           // [m], opponent filter
  double collision_time_window = 0.1;    // [s]
};

// Minimum time to cover d meters from entry speed v_from to exit speed v_to
// under a speed cap v_star, accel limit a and braking limit b. Empty when the
// leg cannot be driven within those limits.
std::optional<double> min_travel_time(double d, double v_from, double v_to, double v_star,
                                      double a, double b);

// Score of Eq.-style team objective: own time plus weighted teammate times
// minus normalized opponent times; lower is better.
double terminal_score(const std::vector<double>& final_times, int player,
                      const std::vector<int>& team_of, double zeta);

// Players ordered by ascending time state, ties by ascending id.
std::vector<int> turn_order(const std::vector<DiscreteState>& states);

// Checkpoint-level tactical game bound to one track and vehicle. Transition
// queries are pure and safe to share across concurrent planners.
class DiscreteGame {
 public:
  DiscreteGame(const TrackModel* track, const VehicleParams& vehicle,
               const DiscreteGameConfig& config);

  const TrackModel& track() const { return *track_; }
  const VehicleParams& vehicle() const { return vehicle_; }
  const DiscreteGameConfig& config() const { return config_; }
  int lane_count() const { return track_->spec().lane_count; }
  int v_bucket_count() const { return v_bucket_count_; }

  // Throws std::domain_error off the track surface.
  DiscreteState discretize(const ContinuousState& state, int player) const;

  // Lane-to-lane distance over the leg from checkpoint k to k+1.
  double travel_distance(int k, int lane_from, int lane_to) const;
  // Speed cap at checkpoint k+1 (infinite-radius convention on straights).
  double max_allowed_velocity(double wear, int k_next, int lane) const;
  double tire_wear_increment(int k, int lane_from, int lane_to, double d, double v_target) const;

  // Every lane/velocity pair that survives feasibility, rule, and co-arrival
  // pruning; falls back to a single forced hold-lane/max-brake option rather
  // than returning nothing.
  std::vector<ActionOption> enumerate_actions(const DiscreteState& s,
                                              const std::vector<LaneOccupancy>& occupied) const;

  // Re-derives (dt, de) for one action; empty if the action is infeasible.
  std::optional<ActionOption> evaluate_action(const DiscreteState& s, const DiscreteAction& action,
                                              const std::vector<LaneOccupancy>& occupied) const;

  DiscreteState apply_action(const DiscreteState& s, const ActionOption& option) const;

  bool checkpoint_on_straight(int k) const;

 private:
  bool lane_change_allowed(const DiscreteState& s, int target_lane) const;
  int section_of_checkpoint(int k) const;  // -1 for curves and the start line on one

  const TrackModel* track_;
  VehicleParams vehicle_;
  DiscreteGameConfig config_;
  int v_bucket_count_;
  // travel_distance memo, indexed [k][from-1][to-1].
  std::vector<double> distance_table_;
};

}  // namespace teamrace
