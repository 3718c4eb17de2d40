#include "teamrace/vehicle_dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "teamrace/util.hpp"

namespace teamrace {

void VehicleParams::validate() const {
  if (!(a > 0.0)) throw ConfigError("a must be positive");
  if (!(b > 0.0)) throw ConfigError("b must be positive");
  if (!(v_max > 0.0)) throw ConfigError("v_max must be positive");
  if (!(a_max > a_min)) throw ConfigError("a_max must exceed a_min");
  if (!(a_min > 0.0)) throw ConfigError("a_min must be positive");
  if (!(wear_rate >= 0.0)) throw ConfigError("wear_rate must be >= 0");
  if (!(vehicle_radius > 0.0)) throw ConfigError("vehicle_radius must be positive");
  if (!(L_straight >= 0.0)) throw ConfigError("L_straight must be >= 0");
  if (!(L_curve >= 0.0)) throw ConfigError("L_curve must be >= 0");
}

double allowed_lateral_accel(double tire_wear, const VehicleParams& params) {
  return params.a_max - (params.a_max - params.a_min) * tire_wear;
}

double update_tire_wear(double accumulated_turn, const VehicleParams& params) {
  return 1.0 - std::exp(-params.wear_rate * accumulated_turn);
}

ControlInput clamp_control(const ContinuousState& state, const ControlInput& u,
                           const VehicleParams& params) {
  ControlInput out;
  out.accel = std::clamp(u.accel, -params.b, params.a);
  const double yaw_bound = state.velocity <= 1e-6
                               ? kZeroSpeedYawBound
                               : allowed_lateral_accel(state.tire_wear, params) / state.velocity;
  out.yaw_rate = std::clamp(u.yaw_rate, -yaw_bound, yaw_bound);
  return out;
}

ContinuousState step(const ContinuousState& state, const ControlInput& u, double dt,
                     const VehicleParams& params) {
  ContinuousState next = state;
  next.position.x = state.position.x + state.velocity * std::cos(state.heading) * dt;
  next.position.y = state.position.y + state.velocity * std::sin(state.heading) * dt;
  next.velocity = std::clamp(state.velocity + u.accel * dt, 0.0, params.v_max);
  next.heading = state.heading + u.yaw_rate * dt;
  next.accumulated_turn = state.accumulated_turn + std::abs(u.yaw_rate) * dt;
  next.tire_wear = update_tire_wear(next.accumulated_turn, params);
  next.elapsed_time = state.elapsed_time + dt;
  // Lane, checkpoint, and section bookkeeping belong to the rules layer.
  return next;
}

LinearDynamics linearize(const ContinuousState& state, double dt) {
  LinearDynamics lin;
  const double c = std::cos(state.heading);
  const double s = std::sin(state.heading);
  for (int i = 0; i < 4; ++i) lin.a[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = 1.0;
  lin.a[0][2] = c * dt;
  lin.a[0][3] = -state.velocity * s * dt;
  lin.a[1][2] = s * dt;
  lin.a[1][3] = state.velocity * c * dt;
  lin.b[2][0] = dt;
  lin.b[3][1] = dt;
  return lin;
}

}  // namespace teamrace
