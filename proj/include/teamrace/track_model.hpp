#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "teamrace/geometry.hpp"

namespace teamrace {

enum class SegmentKind { kStraight, kArc };
enum class ArcDirection { kLeft, kRight };

struct SegmentSpec {
  SegmentKind kind = SegmentKind::kStraight;
  double length = 0.0;  // straights [m]
  double radius = 0.0;  // arcs [m], centerline
  double angle = 0.0;   // arcs [rad], in (0, 2*pi]
  ArcDirection direction = ArcDirection::kLeft;

  static SegmentSpec straight(double length) { return {SegmentKind::kStraight, length, 0, 0, ArcDirection::kLeft}; }
  static SegmentSpec arc(double radius, double angle, ArcDirection dir) {
    return {SegmentKind::kArc, 0, radius, angle, dir};
  }
};

struct TrackSpec {
  std::string name;
  int lane_count = 1;             // lambda
  double lane_width = 2.0;        // w_l [m]
  double track_half_width = 4.0;  // w [m]
  int lane_change_limit = 2;      // L, per contiguous straight section
  double checkpoint_spacing = 12.0;  // [m], must lie in [10, 15]
  std::vector<SegmentSpec> segments;

  // Throws ConfigError naming the offending field.
  void validate() const;
};

// One of the tau gates along the centerline; index is 1-based.
struct Checkpoint {
  int index = 0;
  Vec2 position;            // centerline
  double heading = 0.0;     // centerline tangent
  bool on_straight = false;
  int straight_section_id = -1;     // -1 on arcs
  std::vector<Vec2> lane_positions;  // one per lane, along the perpendicular
  std::vector<double> lane_radii;    // per-lane turn radius; empty on straights
};

struct CenterlineProjection {
  double arc_length = 0.0;      // s of the closest centerline point
  double distance = 0.0;        // q: unsigned distance to the centerline
  double lateral_offset = 0.0;  // signed, positive toward track-right
  int segment = 0;
};

// Inter-checkpoint stretch k -> k+1 (k = 0 is the start line -> checkpoint 1).
// Classified by the segment under its arc-length midpoint.
struct TrackLeg {
  bool straight = true;
  double chord = 0.0;          // Euclidean distance between the endpoints
  double arc_length = 0.0;     // centerline length of the leg
  double central_angle = 0.0;  // arc_length / radius for curve legs, 0 otherwise
  double radius = 0.0;         // centerline radius for curve legs
  double dir_sign = 0.0;       // +1 left turn, -1 right turn, 0 straight
};

// Immutable after construction; all queries are const and thread-safe.
class TrackModel {
 public:
  static TrackModel build(const TrackSpec& spec);

  const TrackSpec& spec() const { return spec_; }
  double total_length() const { return total_length_; }
  bool closed() const { return closed_; }

  int checkpoint_count() const { return static_cast<int>(checkpoints_.size()); }
  // k in 1..checkpoint_count().
  const Checkpoint& checkpoint(int k) const { return checkpoints_.at(static_cast<std::size_t>(k - 1)); }

  Pose pose_at(double s) const;
  // World point at arc length s displaced laterally (positive toward track-right).
  Vec2 offset_point(double s, double lateral) const;

  CenterlineProjection project(const Vec2& pos) const;
  // q: distance to the closest centerline point. Total function.
  double centerline_distance(const Vec2& pos) const { return project(pos).distance; }
  // Arc length of the centerline projection; throws for off-track points.
  double progress(const Vec2& pos) const;
  // z: lane whose center is nearest the signed lateral offset; ties break low.
  // Throws for off-track points.
  int lane_id(const Vec2& pos) const;
  // Nearest-lane bucketing without the on-track precondition (bookkeeping helper).
  int nearest_lane(double lateral_offset) const;
  // Signed center offset of a lane, positive toward track-right; lane 1 is track-left.
  double lane_offset(int lane) const;

  // p: latest checkpoint passed, clamped to never decrease below r_prev.
  int last_checkpoint(const Vec2& pos, int r_prev) const;

  bool on_straight(double s) const { return straight_section_at(s) >= 0; }
  // Contiguous straight section id at arc length s, or -1 on a curve.
  int straight_section_at(double s) const;

  // Raw piece geometry, exposed for ray casting against the boundary.
  struct SegmentView {
    SegmentKind kind;
    Pose start;
    double length;    // arc length
    double radius;    // arcs only
    double dir_sign;  // +1 left, -1 right (arcs)
    Vec2 center;      // arcs only
  };
  int segment_count() const { return static_cast<int>(segments_.size()); }
  SegmentView segment_view(int index) const;

  // k in 0..checkpoint_count()-1.
  const TrackLeg& leg(int k) const { return legs_.at(static_cast<std::size_t>(k)); }
  // Per-lane turn radius used for leg k; falls back to the leg's own arc when
  // the endpoint checkpoint sits on a straight. Only meaningful for curve legs.
  double leg_lane_radius(int k, bool at_leg_end, int lane) const;

  std::uint64_t geometry_hash() const { return geometry_hash_; }

 private:
  struct Segment {
    SegmentKind kind;
    Pose start;
    double length;     // arc length
    double radius;     // arcs
    double dir_sign;   // +1 left, -1 right (arcs)
    Vec2 center;       // arcs
    double start_s;
    int straight_section_id;  // -1 for arcs
  };

  int segment_index_at(double s) const;
  double wrap_s(double s) const;

  TrackSpec spec_;
  std::vector<Segment> segments_;
  std::vector<Checkpoint> checkpoints_;
  std::vector<TrackLeg> legs_;
  double total_length_ = 0.0;
  bool closed_ = false;
  std::uint64_t geometry_hash_ = 0;
};

}  // namespace teamrace
