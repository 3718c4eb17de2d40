#include "teamrace/reward_eval.hpp"

#include <algorithm>
#include <cmath>

#include "teamrace/util.hpp"

namespace teamrace {
namespace {

constexpr double kRayEps = 1e-9;

double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }

// Nearest ray parameter hitting the segment p0 + s*dir, s in [0, len].
double ray_vs_segment(const Vec2& origin, const Vec2& u, const Vec2& p0, const Vec2& dir,
                      double len) {
  const double denom = cross(u, dir);
  if (std::abs(denom) < 1e-12) return -1.0;
  const Vec2 rel = p0 - origin;
  const double t = cross(rel, dir) / denom;
  const double s = cross(rel, u) / denom;
  if (t < kRayEps || s < -1e-9 || s > len + 1e-9) return -1.0;
  return t;
}

// Nearest ray parameter hitting a circle, optionally restricted to the angular
// span of an arc segment.
double ray_vs_circle(const Vec2& origin, const Vec2& u, const Vec2& center, double radius,
                     const TrackModel::SegmentView* arc) {
  const Vec2 rel = origin - center;
  const double b = dot(u, rel);
  const double c = squared_norm(rel) - radius * radius;
  const double disc = b * b - c;
  if (disc < 0.0) return -1.0;
  const double root = std::sqrt(disc);
  for (const double t : {-b - root, -b + root}) {
    if (t < kRayEps) continue;
    if (arc) {
      const Vec2 hit = origin + t * u - arc->center;
      const double psi = std::atan2(arc->dir_sign * hit.x, -arc->dir_sign * hit.y);
      const double swept = wrap_angle_positive(arc->dir_sign * (psi - arc->start.heading));
      if (swept * arc->radius > arc->length + 1e-9) continue;
    }
    return t;
  }
  return -1.0;
}

}  // namespace

void RewardWeights::validate() const {
  for (const double w : {speed, direction, swerve, wall_hit, player_hit, player_hit_front,
                         checkpoint_base, checkpoint_time, target_lane, target_velocity,
                         reverse}) {
    if (!(w >= 0.0)) throw ConfigError("reward weights must be >= 0");
  }
  if (!(proximity_threshold > 0.0 && proximity_threshold <= kLidarRange))
    throw ConfigError("proximity_threshold must lie in (0, 20]");
}

LidarScan lidar_scan(const ContinuousState& ego, const std::vector<ContinuousState>& others,
                     const std::vector<bool>& others_active, const TrackModel& track,
                     double vehicle_radius) {
  LidarScan scan;
  const double w = track.spec().track_half_width;
  for (int ray = 0; ray < kLidarRayCount; ++ray) {
    const double angle =
        ego.heading - kLidarFov / 2.0 + kLidarFov * ray / (kLidarRayCount - 1);
    const Vec2 u = heading_dir(angle);
    double best = kLidarRange;
    RayHit kind = RayHit::kNone;

    for (int i = 0; i < track.segment_count(); ++i) {
      const TrackModel::SegmentView seg = track.segment_view(i);
      if (seg.kind == SegmentKind::kStraight) {
        const Vec2 offset = right_normal(seg.start.heading);
        const Vec2 dir = heading_dir(seg.start.heading);
        for (const double side : {w, -w}) {
          const double t = ray_vs_segment(ego.position, u, seg.start.position + side * offset,
                                          dir, seg.length);
          if (t > 0.0 && t < best) {
            best = t;
            kind = RayHit::kWall;
          }
        }
      } else {
        for (const double radius : {seg.radius - w, seg.radius + w}) {
          const double t = ray_vs_circle(ego.position, u, seg.center, radius, &seg);
          if (t > 0.0 && t < best) {
            best = t;
            kind = RayHit::kWall;
          }
        }
      }
    }
    for (std::size_t p = 0; p < others.size(); ++p) {
      if (!others_active[p]) continue;
      const double t =
          ray_vs_circle(ego.position, u, others[p].position, vehicle_radius, nullptr);
      if (t > 0.0 && t < best) {
        best = t;
        kind = RayHit::kPlayer;
      }
    }
    scan.distances[static_cast<std::size_t>(ray)] = best;
    scan.hits[static_cast<std::size_t>(ray)] = kind;
  }
  return scan;
}

StepRewards step_rewards(const ContinuousState& ego, const LidarScan& scan,
                         const RewardWeights& weights, const TrackModel& track,
                         const VehicleParams& vehicle) {
  StepRewards out;
  out.speed = weights.speed * ego.velocity / vehicle.v_max;

  const int next = std::min(ego.last_checkpoint + 1, track.checkpoint_count());
  const Vec2 to_checkpoint = track.checkpoint(next).position - ego.position;
  const Vec2 velocity = ego.velocity * heading_dir(ego.heading);
  out.direction = weights.direction * dot(velocity, to_checkpoint);

  const bool swerving = ego.straight_section >= 0 &&
                        ego.lane_change_count > track.spec().lane_change_limit;
  out.swerve = swerving ? -weights.swerve : 0.0;

  for (int ray = 0; ray < kLidarRayCount; ++ray) {
    const std::size_t r = static_cast<std::size_t>(ray);
    if (scan.distances[r] >= weights.proximity_threshold) continue;
    if (scan.hits[r] == RayHit::kWall) {
      out.wall_hit -= weights.wall_hit;
    } else if (scan.hits[r] == RayHit::kPlayer) {
      out.player_hit -= weights.player_hit;
      if (std::find(kFrontRays.begin(), kFrontRays.end(), ray) != kFrontRays.end())
        out.player_hit -= weights.player_hit_front;
    }
  }
  return out;
}

CheckpointRewards checkpoint_rewards(const ContinuousState& ego, int crossing_rank, double t,
                                     double time_limit, const PlanWaypoint& target,
                                     int ego_lane, int r_prev, int r_now,
                                     const RewardWeights& weights) {
  CheckpointRewards out;
  out.base = weights.checkpoint_base *
             kCheckpointOrderMultiplier.at(static_cast<std::size_t>(crossing_rank - 1));
  out.time = weights.checkpoint_time * (time_limit - t) / time_limit;
  const double lane_gap =
      std::abs(ego_lane - target.lane) * distance(ego.position, target.position);
  out.target = weights.target_lane / std::pow(1.3, lane_gap) +
               weights.target_velocity /
                   std::pow(1.1, std::abs(ego.velocity - target.target_velocity));
  out.reverse = r_now <= r_prev ? -weights.reverse : 0.0;
  return out;
}

}  // namespace teamrace
