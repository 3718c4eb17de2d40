#pragma once
#include <array>
#include <string>
#include <vector>

#include "teamrace/track_model.hpp"
#include "teamrace/vehicle_dynamics.hpp"

namespace teamrace {

struct RuleParams {
  double s0 = 1.2;  // min separation, side by side [m]
  double s1 = 2.2;  // min separation while following [m]
  int lane_change_limit = 2;           // L, per contiguous straight section
  double behind_lateral_band = 2.0;    // [m]
  double collision_time_window = 0.1;  // [s], discrete-game co-arrival window

  void validate() const;
};

enum class ViolationKind { kOffTrack, kSeparation, kIllegalLaneChange };

struct ViolationEvent {
  double time = 0.0;
  ViolationKind kind = ViolationKind::kOffTrack;
  int player = -1;        // offender (or first offender for shared fault)
  int other_player = -1;  // -1 unless a separation event
};

struct ViolationLog {
  std::vector<ViolationEvent> events;
  std::array<int, 4> collisions_at_fault{};
  std::array<int, 4> illegal_lane_changes{};
  std::array<int, 4> off_track_events{};
};

struct TeamScore {
  std::array<double, 4> player_points{};
  std::array<double, 2> team_points{};
  int winner = -1;  // 0 = team A, 1 = team B, -1 = draw
};

inline constexpr std::array<double, 4> kFinishPoints{10.0, 7.5, 6.0, 4.0};

// Points by finishing position, zero for DNF. Players 0..3; teams are {0,1}
// and {2,3}. finish_order lists all four player ids best-first.
TeamScore score_finish(const std::vector<int>& finish_order, const std::array<bool, 4>& finished);

// Collisions-at-fault plus illegal lane changes, summed per team.
std::array<double, 2> safety_score(const ViolationLog& log);

// Pure counting rule: hold the counter inside one section, bump it on a lane
// switch within a straight section, reset whenever the section changes.
// Sections are straight ids >= 0, or -1 on curves.
int update_lane_change_count(int prev_section, int prev_lane, int count, int now_section,
                             int now_lane);

// Stateful per-race auditor. Violations are recorded, never enforced; each
// sustained condition logs a single edge-triggered event.
class RulesAuditor {
 public:
  RulesAuditor(const TrackModel* track, const RuleParams& rules, double vehicle_radius,
               int player_count);

  // True iff i trails j inside the following corridor: positive forward gap
  // along the centerline (seam-aware on closed tracks) of at most
  // s1 + vehicle diameter, within the lateral band.
  bool is_behind(const ContinuousState& i, const ContinuousState& j) const;

  struct SeparationResult {
    bool violation = false;
    double required = 0.0;
    bool fault_i = false;
    bool fault_j = false;
  };
  SeparationResult check_separation(const ContinuousState& i, const ContinuousState& j) const;

  bool within_bounds(const ContinuousState& state) const;
  bool lane_limit_ok(const ContinuousState& state) const;

  // Recomputes lane and straight-section classification for one player,
  // updating lane_change_count and straight_section in place and logging
  // any increment past the limit.
  void update_lane_bookkeeping(int player, ContinuousState& state);

  // Edge-triggered bounds and pairwise-separation audit over all racing
  // players; call once per tick after states have been advanced.
  void observe(const std::vector<ContinuousState>& states, const std::vector<bool>& racing,
               double now);

  const ViolationLog& log() const { return log_; }
  const RuleParams& rules() const { return rules_; }

 private:
  const TrackModel* track_;
  RuleParams rules_;
  double vehicle_radius_;
  int player_count_;
  ViolationLog log_;
  std::vector<int> prev_lane_;
  std::vector<char> out_of_bounds_;             // latched per player
  std::vector<char> separation_active_;         // latched per ordered pair i<j
  std::vector<int> last_logged_excess_;         // lane changes already reported

  int pair_index(int i, int j) const { return i * player_count_ + j; }
};

}  // namespace teamrace
