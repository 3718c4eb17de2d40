#pragma once
#include <array>

#include "teamrace/geometry.hpp"

namespace teamrace {

struct VehicleParams {
  double a = 8.0;       // max longitudinal acceleration [m/s^2]
  double b = 12.0;      // max deceleration [m/s^2], positive
  double v_max = 24.0;  // [m/s]
  double a_max = 15.0;  // lateral acceleration at zero wear [m/s^2]
  double a_min = 4.0;   // lateral acceleration floor at full wear [m/s^2]
  double wear_rate = 0.015;    // kappa [1/rad], exponential grip decay
  double vehicle_radius = 0.6;  // collision disc [m]
  double L_straight = 2e-5;    // wear factor on straights [1/m]
  double L_curve = 1.2e-4;     // wear factor on curves [s^2/m^3]

  // Throws ConfigError naming the offending field.
  void validate() const;
};

struct ContinuousState {
  Vec2 position;
  double velocity = 0.0;  // [m/s], forward only
  double heading = 0.0;   // [rad], unwrapped accumulator
  double accumulated_turn = 0.0;  // A: integral of |yaw rate| [rad]
  double tire_wear = 0.0;         // e = 1 - exp(-kappa * A), in [0, 1)
  int lane_change_count = 0;
  int last_checkpoint = 0;
  double elapsed_time = 0.0;
  int straight_section = -1;  // -1 while on a curve
};

struct ControlInput {
  double accel = 0.0;     // [m/s^2]
  double yaw_rate = 0.0;  // [rad/s]
};

// Discrete-time Jacobians of step() around a state, state order (x, y, v, theta).
struct LinearDynamics {
  std::array<std::array<double, 4>, 4> a{};
  std::array<std::array<double, 2>, 4> b{};
};

double allowed_lateral_accel(double tire_wear, const VehicleParams& params);
double update_tire_wear(double accumulated_turn, const VehicleParams& params);

// Clips accel to [-b, a] and yaw rate so |v * yaw| stays within the grip
// limit; at standstill the lateral constraint vanishes, so a fixed bound
// applies instead.
ControlInput clamp_control(const ContinuousState& state, const ControlInput& u,
                           const VehicleParams& params);

// Forward-Euler unicycle update; expects a clamped control. Heading is left
// unwrapped so the map stays smooth for finite differencing.
ContinuousState step(const ContinuousState& state, const ControlInput& u, double dt,
                     const VehicleParams& params);

LinearDynamics linearize(const ContinuousState& state, double dt);

inline constexpr double kZeroSpeedYawBound = 1.0;  // omega_0 [rad/s]

}  // namespace teamrace
