#include "teamrace/racing_rules.hpp"

#include <algorithm>
#include <cmath>

#include "teamrace/util.hpp"

namespace teamrace {

void RuleParams::validate() const {
  if (!(s0 > 0.0)) throw ConfigError("s0 must be positive");
  if (!(s1 >= s0)) throw ConfigError("s1 must be >= s0");
  if (lane_change_limit < 0) throw ConfigError("lane_change_limit must be >= 0");
  if (!(behind_lateral_band >= 0.0)) throw ConfigError("behind_lateral_band must be >= 0");
  if (!(collision_time_window > 0.0)) throw ConfigError("collision_time_window must be positive");
}

TeamScore score_finish(const std::vector<int>& finish_order, const std::array<bool, 4>& finished) {
  if (finish_order.size() != 4) throw ConfigError("score_finish expects exactly 4 players");
  TeamScore score;
  for (std::size_t pos = 0; pos < 4; ++pos) {
    const int player = finish_order[pos];
    if (player < 0 || player > 3) throw ConfigError("score_finish: player id out of range");
    score.player_points[static_cast<std::size_t>(player)] =
        finished[static_cast<std::size_t>(player)] ? kFinishPoints[pos] : 0.0;
  }
  score.team_points[0] = score.player_points[0] + score.player_points[1];
  score.team_points[1] = score.player_points[2] + score.player_points[3];
  if (score.team_points[0] > score.team_points[1])
    score.winner = 0;
  else if (score.team_points[1] > score.team_points[0])
    score.winner = 1;
  return score;
}

std::array<double, 2> safety_score(const ViolationLog& log) {
  std::array<double, 2> per_team{};
  for (int player = 0; player < 4; ++player) {
    per_team[static_cast<std::size_t>(player / 2)] +=
        log.collisions_at_fault[static_cast<std::size_t>(player)] +
        log.illegal_lane_changes[static_cast<std::size_t>(player)];
  }
  return per_team;
}

int update_lane_change_count(int prev_section, int prev_lane, int count, int now_section,
                             int now_lane) {
  if (now_section != prev_section) return 0;
  if (now_section >= 0 && now_lane != prev_lane) return count + 1;
  return count;
}

RulesAuditor::RulesAuditor(const TrackModel* track, const RuleParams& rules,
                           double vehicle_radius, int player_count)
    : track_(track),
      rules_(rules),
      vehicle_radius_(vehicle_radius),
      player_count_(player_count),
      prev_lane_(static_cast<std::size_t>(player_count), -1),
      out_of_bounds_(static_cast<std::size_t>(player_count), 0),
      separation_active_(static_cast<std::size_t>(player_count * player_count), 0),
      last_logged_excess_(static_cast<std::size_t>(player_count), 0) {
  rules_.validate();
}

bool RulesAuditor::is_behind(const ContinuousState& i, const ContinuousState& j) const {
  const CenterlineProjection pi = track_->project(i.position);
  const CenterlineProjection pj = track_->project(j.position);
  double gap = pj.arc_length - pi.arc_length;
  if (track_->closed()) {
    gap = std::fmod(gap, track_->total_length());
    if (gap < 0.0) gap += track_->total_length();
    // A "gap" of nearly a full lap means i is actually just ahead of j.
    if (gap > track_->total_length() / 2.0) return false;
  }
  if (gap <= 0.0) return false;
  if (std::abs(pi.lateral_offset - pj.lateral_offset) > rules_.behind_lateral_band) return false;
  return gap <= rules_.s1 + 2.0 * vehicle_radius_;
}

RulesAuditor::SeparationResult RulesAuditor::check_separation(const ContinuousState& i,
                                                              const ContinuousState& j) const {
  SeparationResult result;
  if (is_behind(i, j)) {
    result.required = rules_.s1;
    result.fault_i = true;
  } else if (is_behind(j, i)) {
    result.required = rules_.s1;
    result.fault_j = true;
  } else {
    result.required = rules_.s0;
    result.fault_i = result.fault_j = true;
  }
  result.violation = distance(i.position, j.position) < result.required;
  if (!result.violation) result.fault_i = result.fault_j = false;
  return result;
}

bool RulesAuditor::within_bounds(const ContinuousState& state) const {
  return track_->centerline_distance(state.position) <= track_->spec().track_half_width;
}

bool RulesAuditor::lane_limit_ok(const ContinuousState& state) const {
  return state.straight_section < 0 || state.lane_change_count <= rules_.lane_change_limit;
}

void RulesAuditor::update_lane_bookkeeping(int player, ContinuousState& state) {
  const CenterlineProjection proj = track_->project(state.position);
  const int now_section = track_->straight_section_at(proj.arc_length);
  const int now_lane = track_->nearest_lane(proj.lateral_offset);
  const std::size_t p = static_cast<std::size_t>(player);
  if (prev_lane_[p] < 0) {
    // First observation just records where the player starts.
    state.straight_section = now_section;
    prev_lane_[p] = now_lane;
    return;
  }
  const int count = update_lane_change_count(state.straight_section, prev_lane_[p],
                                             state.lane_change_count, now_section, now_lane);
  if (now_section != state.straight_section) last_logged_excess_[p] = 0;
  state.lane_change_count = count;
  state.straight_section = now_section;
  prev_lane_[p] = now_lane;

  const int excess = now_section >= 0 ? count - rules_.lane_change_limit : 0;
  if (excess > last_logged_excess_[p]) {
    log_.events.push_back({state.elapsed_time, ViolationKind::kIllegalLaneChange, player, -1});
    log_.illegal_lane_changes[p] += excess - last_logged_excess_[p];
    last_logged_excess_[p] = excess;
  }
}

void RulesAuditor::observe(const std::vector<ContinuousState>& states,
                           const std::vector<bool>& racing, double now) {
  for (int i = 0; i < player_count_; ++i) {
    const std::size_t pi = static_cast<std::size_t>(i);
    if (!racing[pi]) continue;
    const bool out = !within_bounds(states[pi]);
    if (out && !out_of_bounds_[pi]) {
      log_.events.push_back({now, ViolationKind::kOffTrack, i, -1});
      log_.off_track_events[pi] += 1;
    }
    out_of_bounds_[pi] = out ? 1 : 0;
  }
  for (int i = 0; i < player_count_; ++i) {
    for (int j = i + 1; j < player_count_; ++j) {
      if (!racing[static_cast<std::size_t>(i)] || !racing[static_cast<std::size_t>(j)]) {
        separation_active_[static_cast<std::size_t>(pair_index(i, j))] = 0;
        continue;
      }
      const SeparationResult sep =
          check_separation(states[static_cast<std::size_t>(i)], states[static_cast<std::size_t>(j)]);
      char& active = separation_active_[static_cast<std::size_t>(pair_index(i, j))];
      if (sep.violation && !active) {
        // One event per player at fault, so counters stay recomputable from
        // the raw event stream.
        if (sep.fault_i) {
          log_.events.push_back({now, ViolationKind::kSeparation, i, j});
          log_.collisions_at_fault[static_cast<std::size_t>(i)] += 1;
        }
        if (sep.fault_j) {
          log_.events.push_back({now, ViolationKind::kSeparation, j, i});
          log_.collisions_at_fault[static_cast<std::size_t>(j)] += 1;
        }
      }
      active = sep.violation ? 1 : 0;
    }
  }
}

}  // namespace teamrace
