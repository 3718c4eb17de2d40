#pragma once
#include <array>
#include <vector>

#include "teamrace/mcts_planner.hpp"
#include "teamrace/track_model.hpp"
#include "teamrace/vehicle_dynamics.hpp"

namespace teamrace {

inline constexpr int kLidarRayCount = 9;
inline constexpr double kLidarFov = kPi;      // 180 degrees, centered on heading
inline constexpr double kLidarRange = 20.0;   // [m]
// Rays pointing toward the front of the kart (middle three of nine).
inline constexpr std::array<int, 3> kFrontRays{3, 4, 5};

struct RewardWeights {
  double speed = 1.0;
  double direction = 1.0;
  double swerve = 1.0;
  double wall_hit = 1.0;
  double player_hit = 1.0;
  double player_hit_front = 1.0;
  double checkpoint_base = 1.0;
  double checkpoint_time = 1.0;
  double target_lane = 1.0;      // omega_1 of the target-tracking bonus
  double target_velocity = 1.0;  // omega_2 of the target-tracking bonus
  double reverse = 1.0;
  double proximity_threshold = 1.5;  // h [m]

  void validate() const;
};

enum class RayHit { kNone, kWall, kPlayer };

struct LidarScan {
  std::array<double, kLidarRayCount> distances{};
  std::array<RayHit, kLidarRayCount> hits{};
};

// Casts nine rays over the forward half-plane against the track boundary
// (both offset walls) and the other players' collision discs.
LidarScan lidar_scan(const ContinuousState& ego, const std::vector<ContinuousState>& others,
                     const std::vector<bool>& others_active, const TrackModel& track,
                     double vehicle_radius);

struct StepRewards {
  double speed = 0.0;
  double direction = 0.0;
  double swerve = 0.0;
  double wall_hit = 0.0;
  double player_hit = 0.0;
  double total() const { return speed + direction + swerve + wall_hit + player_hit; }
};

StepRewards step_rewards(const ContinuousState& ego, const LidarScan& scan,
                         const RewardWeights& weights, const TrackModel& track,
                         const VehicleParams& vehicle);

struct CheckpointRewards {
  double base = 0.0;
  double time = 0.0;
  double target = 0.0;
  double reverse = 0.0;
  double total() const { return base + time + target + reverse; }
};

// crossing_rank is 1-based among the four players at this checkpoint.
CheckpointRewards checkpoint_rewards(const ContinuousState& ego, int crossing_rank, double t,
                                     double time_limit, const PlanWaypoint& target,
                                     int ego_lane, int r_prev, int r_now,
                                     const RewardWeights& weights);

inline constexpr std::array<double, 4> kCheckpointOrderMultiplier{1.0, 0.75, 0.6, 0.4};

}  // namespace teamrace
