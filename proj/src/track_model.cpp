#include "teamrace/track_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "teamrace/util.hpp"

namespace teamrace {
namespace {

constexpr double kClosureTol = 1e-6;
// Guards floor() at exact checkpoint multiples against representation error.
constexpr double kIndexEps = 1e-9;

}  // namespace

void TrackSpec::validate() const {
  if (lane_count < 1) throw ConfigError("lanes must be >= 1");
  if (!(lane_width > 0.0)) throw ConfigError("lane_width must be positive");
  if (!(track_half_width >= lane_count * lane_width / 2.0))
    throw ConfigError("track_half_width must cover all lanes (>= lanes * lane_width / 2)");
  if (lane_change_limit < 0) throw ConfigError("lane_change_limit must be >= 0");
  if (!(checkpoint_spacing >= 10.0 && checkpoint_spacing <= 15.0))
    throw ConfigError("checkpoint_spacing must lie in [10, 15]");
  if (segments.empty()) throw ConfigError("segments must not be empty");
  double total = 0.0;
  for (const SegmentSpec& seg : segments) {
    if (seg.kind == SegmentKind::kStraight) {
      if (!(seg.length > 0.0)) throw ConfigError("segments: straight length must be positive");
      total += seg.length;
    } else {
      if (!(seg.radius > 0.0)) throw ConfigError("segments: arc radius must be positive");
      if (!(seg.radius > track_half_width))
        throw ConfigError("segments: arc radius must exceed track_half_width");
      if (!(seg.angle > 0.0 && seg.angle <= kTwoPi))
        throw ConfigError("segments: arc angle must lie in (0, 2*pi]");
      total += seg.radius * seg.angle;
    }
  }
  if (total < checkpoint_spacing)
    throw ConfigError("segments: total length shorter than one checkpoint_spacing");
}

TrackModel TrackModel::build(const TrackSpec& spec) {
  spec.validate();
  TrackModel model;
  model.spec_ = spec;

  Pose cursor{{0.0, 0.0}, 0.0};
  double s = 0.0;
  for (const SegmentSpec& in : spec.segments) {
    Segment seg{};
    seg.kind = in.kind;
    seg.start = cursor;
    seg.start_s = s;
    seg.straight_section_id = -1;
    if (in.kind == SegmentKind::kStraight) {
      seg.length = in.length;
      cursor.position += in.length * heading_dir(cursor.heading);
    } else {
      seg.length = in.radius * in.angle;
      seg.radius = in.radius;
      seg.dir_sign = in.direction == ArcDirection::kLeft ? 1.0 : -1.0;
      seg.center = cursor.position - seg.dir_sign * in.radius * right_normal(cursor.heading);
      cursor.heading = wrap_angle(cursor.heading + seg.dir_sign * in.angle);
      cursor.position = seg.center + seg.dir_sign * in.radius * right_normal(cursor.heading);
    }
    s += seg.length;
    model.segments_.push_back(seg);
  }
  model.total_length_ = s;
  model.closed_ = norm(cursor.position) < kClosureTol &&
                  std::abs(wrap_angle(cursor.heading)) < kClosureTol;

  // Contiguous straight runs share a section id; on closed tracks a run that
  // spans the start/finish seam counts as one section.
  int next_id = 0;
  bool in_run = false;
  for (Segment& seg : model.segments_) {
    if (seg.kind == SegmentKind::kStraight) {
      seg.straight_section_id = in_run ? next_id - 1 : next_id++;
      in_run = true;
    } else {
      in_run = false;
    }
  }
  if (model.closed_ && model.segments_.size() > 1 &&
      model.segments_.front().kind == SegmentKind::kStraight &&
      model.segments_.back().kind == SegmentKind::kStraight &&
      model.segments_.back().straight_section_id != model.segments_.front().straight_section_id) {
    const int merged = model.segments_.front().straight_section_id;
    const int dropped = model.segments_.back().straight_section_id;
    for (Segment& seg : model.segments_) {
      if (seg.straight_section_id == dropped) seg.straight_section_id = merged;
    }
  }

  const double spacing = spec.checkpoint_spacing;
  const int tau = static_cast<int>(std::floor(model.total_length_ / spacing + kIndexEps));
  for (int k = 1; k <= tau; ++k) {
    const double sk = std::min(k * spacing, model.total_length_);
    const Pose pose = model.pose_at(sk);
    const Segment& seg = model.segments_[static_cast<std::size_t>(model.segment_index_at(sk))];
    Checkpoint cp;
    cp.index = k;
    cp.position = pose.position;
    cp.heading = pose.heading;
    cp.on_straight = seg.kind == SegmentKind::kStraight;
    cp.straight_section_id = seg.straight_section_id;
    const Vec2 right = right_normal(pose.heading);
    for (int lane = 1; lane <= spec.lane_count; ++lane) {
      const double off = model.lane_offset(lane);
      cp.lane_positions.push_back(pose.position + off * right);
      if (!cp.on_straight) cp.lane_radii.push_back(seg.radius + seg.dir_sign * off);
    }
    model.checkpoints_.push_back(std::move(cp));
  }

  for (int k = 0; k < tau; ++k) {
    const Vec2 from = k == 0 ? Vec2{0.0, 0.0} : model.checkpoints_[static_cast<std::size_t>(k - 1)].position;
    const Vec2 to = model.checkpoints_[static_cast<std::size_t>(k)].position;
    TrackLeg leg;
    leg.arc_length = std::min((k + 1) * spacing, model.total_length_) - k * spacing;
    leg.chord = distance(from, to);
    const double mid = k * spacing + leg.arc_length / 2.0;
    const Segment& seg = model.segments_[static_cast<std::size_t>(model.segment_index_at(mid))];
    if (seg.kind == SegmentKind::kArc) {
      leg.straight = false;
      leg.radius = seg.radius;
      leg.dir_sign = seg.dir_sign;
      leg.central_angle = leg.arc_length / seg.radius;
    }
    model.legs_.push_back(leg);
  }

  Fnv1a64 hash;
  hash.update_value(spec.lane_count);
  hash.update_value(spec.lane_width);
  hash.update_value(spec.track_half_width);
  hash.update_value(spec.lane_change_limit);
  hash.update_value(spec.checkpoint_spacing);
  for (const SegmentSpec& seg : spec.segments) {
    hash.update_value(static_cast<int>(seg.kind));
    if (seg.kind == SegmentKind::kStraight) {
      hash.update_value(seg.length);
    } else {
      hash.update_value(seg.radius);
      hash.update_value(seg.angle);
      hash.update_value(static_cast<int>(seg.direction));
    }
  }
  model.geometry_hash_ = hash.digest();
  return model;
}

double TrackModel::wrap_s(double s) const {
  if (closed_) {
    s = std::fmod(s, total_length_);
    if (s < 0.0) s += total_length_;
    return s;
  }
  return std::clamp(s, 0.0, total_length_);
}

int TrackModel::segment_index_at(double s) const {
  s = wrap_s(s);
  int lo = 0;
  int hi = static_cast<int>(segments_.size()) - 1;
  while (lo < hi) {
    const int mid = (lo + hi + 1) / 2;
    if (segments_[static_cast<std::size_t>(mid)].start_s <= s)
      lo = mid;
    else
      hi = mid - 1;
  }
  return lo;
}

Pose TrackModel::pose_at(double s) const {
  s = wrap_s(s);
  const Segment& seg = segments_[static_cast<std::size_t>(segment_index_at(s))];
  const double ds = s - seg.start_s;
  if (seg.kind == SegmentKind::kStraight)
    return {seg.start.position + ds * heading_dir(seg.start.heading), seg.start.heading};
  const double theta = wrap_angle(seg.start.heading + seg.dir_sign * ds / seg.radius);
  return {seg.center + seg.dir_sign * seg.radius * right_normal(theta), theta};
}

Vec2 TrackModel::offset_point(double s, double lateral) const {
  const Pose pose = pose_at(s);
  return pose.position + lateral * right_normal(pose.heading);
}

CenterlineProjection TrackModel::project(const Vec2& pos) const {
  CenterlineProjection best;
  best.distance = std::numeric_limits<double>::infinity();
  auto consider = [&](double s, double dist, double lateral, int index) {
    if (dist < best.distance - 1e-12 ||
        (dist < best.distance + 1e-12 && s < best.arc_length)) {
      best = {s, dist, lateral, index};
    }
  };
  for (int index = 0; index < static_cast<int>(segments_.size()); ++index) {
    const Segment& seg = segments_[static_cast<std::size_t>(index)];
    if (seg.kind == SegmentKind::kStraight) {
      const Vec2 dir = heading_dir(seg.start.heading);
      const Vec2 rel = pos - seg.start.position;
      const double along = std::clamp(dot(rel, dir), 0.0, seg.length);
      const Vec2 closest = seg.start.position + along * dir;
      consider(seg.start_s + along, distance(pos, closest),
               dot(rel, right_normal(seg.start.heading)), index);
    } else {
      const Vec2 rel = pos - seg.center;
      const double rho = norm(rel);
      const double psi = std::atan2(seg.dir_sign * rel.x, -seg.dir_sign * rel.y);
      const double swept =
          wrap_angle_positive(seg.dir_sign * (psi - seg.start.heading)) * seg.radius;
      const double lateral = seg.dir_sign * (rho - seg.radius);
      if (rho > 1e-12 && swept <= seg.length) {
        consider(seg.start_s + swept, std::abs(rho - seg.radius), lateral, index);
      }
      // Arc endpoints compete when the point falls outside the swept range.
      for (const double ends : {0.0, seg.length}) {
        const Pose end_pose = pose_at(std::min(seg.start_s + ends, total_length_));
        consider(seg.start_s + ends, distance(pos, end_pose.position),
                 dot(pos - end_pose.position, right_normal(end_pose.heading)), index);
      }
    }
  }
  if (closed_ && best.arc_length >= total_length_ - 1e-12) best.arc_length = 0.0;
  return best;
}

double TrackModel::progress(const Vec2& pos) const {
  const CenterlineProjection proj = project(pos);
  if (proj.distance > spec_.track_half_width)
    throw std::domain_error("progress: position is off the track surface");
  return proj.arc_length;
}

int TrackModel::nearest_lane(double lateral_offset) const {
  int best = 1;
  double best_gap = std::numeric_limits<double>::infinity();
  for (int lane = 1; lane <= spec_.lane_count; ++lane) {
    const double gap = std::abs(lateral_offset - lane_offset(lane));
    if (gap < best_gap) {  // strict: ties keep the lower lane id
      best_gap = gap;
      best = lane;
    }
  }
  return best;
}

int TrackModel::lane_id(const Vec2& pos) const {
  const CenterlineProjection proj = project(pos);
  if (proj.distance > spec_.track_half_width)
    throw std::domain_error("lane_id: position is off the track surface");
  return nearest_lane(proj.lateral_offset);
}

double TrackModel::lane_offset(int lane) const {
  return (lane - (spec_.lane_count + 1) / 2.0) * spec_.lane_width;
}

int TrackModel::last_checkpoint(const Vec2& pos, int r_prev) const {
  const CenterlineProjection proj = project(pos);
  int k = static_cast<int>(std::floor(proj.arc_length / spec_.checkpoint_spacing + kIndexEps));
  k = std::min(k, checkpoint_count());
  return std::max(r_prev, k);
}

TrackModel::SegmentView TrackModel::segment_view(int index) const {
  const Segment& seg = segments_.at(static_cast<std::size_t>(index));
  return {seg.kind, seg.start, seg.length, seg.radius, seg.dir_sign, seg.center};
}

int TrackModel::straight_section_at(double s) const {
  return segments_[static_cast<std::size_t>(segment_index_at(s))].straight_section_id;
}

double TrackModel::leg_lane_radius(int k, bool at_leg_end, int lane) const {
  const TrackLeg& l = legs_.at(static_cast<std::size_t>(k));
  const double point_s = (k + (at_leg_end ? 1 : 0)) * spec_.checkpoint_spacing;
  const Segment& seg =
      segments_[static_cast<std::size_t>(segment_index_at(std::min(point_s, total_length_)))];
  const double off = lane_offset(lane);
  if (seg.kind == SegmentKind::kArc) return seg.radius + seg.dir_sign * off;
  return l.radius + l.dir_sign * off;
}

}  // namespace teamrace
