#pragma once
#include <vector>

#include "teamrace/vehicle_dynamics.hpp"

namespace teamrace {

// Absolute race-clock times at which a player crossed each checkpoint;
// times[i] belongs to checkpoint i+1. Every player sees every log.
struct PassageLog {
  std::vector<double> times;
  int checkpoints_passed() const { return static_cast<int>(times.size()); }
};

// Read-only view of the race handed to controllers each tick.
struct WorldSnapshot {
  double time = 0.0;
  std::vector<ContinuousState> states;
  std::vector<PassageLog> passages;
  std::vector<bool> racing;  // false once finished or timed out
  std::vector<int> team_of;
};

}  // namespace teamrace
