#include <doctest.h>

#include <cmath>
#include <random>

#include "teamrace/vehicle_dynamics.hpp"
#include "test_helpers.hpp"

using namespace teamrace;
using namespace teamrace::testing;

namespace {

// Integrates the unicycle with many small Euler substeps; stands in for the
// exact flow when checking the one-shot step's truncation order.
ContinuousState fine_flow(ContinuousState s, const ControlInput& u, double dt, int substeps,
                          const VehicleParams& params) {
  const double h = dt / substeps;
  for (int i = 0; i < substeps; ++i) s = step(s, u, h, params);
  return s;
}

double state_gap(const ContinuousState& a, const ContinuousState& b) {
  return std::sqrt(squared_norm(a.position - b.position) +
                   (a.velocity - b.velocity) * (a.velocity - b.velocity) +
                   (a.heading - b.heading) * (a.heading - b.heading));
}

}  // namespace

TEST_SUITE("vehicle_dynamics") {

TEST_CASE("parameter validation names the offending field") {
  expect_config_error([] { VehicleParams p; p.a = 0.0; p.validate(); }, "a");
  expect_config_error([] { VehicleParams p; p.b = -1.0; p.validate(); }, "b");
  expect_config_error([] { VehicleParams p; p.v_max = 0.0; p.validate(); }, "v_max");
  expect_config_error([] { VehicleParams p; p.a_min = 20.0; p.validate(); }, "a_max");
  expect_config_error([] { VehicleParams p; p.vehicle_radius = 0.0; p.validate(); },
                      "vehicle_radius");
}

TEST_CASE("forward step: coasting, throttle, and the speed cap") {
  const VehicleParams params;
  ContinuousState s = state_at({0.0, 0.0}, 10.0, 0.0);

  const ContinuousState coast = step(s, {0.0, 0.0}, 0.02, params);
  CHECK(coast.position.x == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(coast.position.y == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(coast.velocity == doctest::Approx(10.0));

  const ContinuousState throttle = step(s, {5.0, 0.0}, 0.02, params);
  CHECK(throttle.velocity == doctest::Approx(10.1).epsilon(1e-12));
  // Position integrates the pre-step velocity.
  CHECK(throttle.position.x == doctest::Approx(0.2).epsilon(1e-12));

  s.velocity = params.v_max;
  CHECK(step(s, {params.a, 0.0}, 0.02, params).velocity == doctest::Approx(params.v_max));
  s.velocity = 23.9;
  CHECK(step(s, {8.0, 0.0}, 0.02, params).velocity == doctest::Approx(params.v_max));
  s.velocity = 0.05;
  CHECK(step(s, {-12.0, 0.0}, 0.02, params).velocity == doctest::Approx(0.0));
}

TEST_CASE("grip budget shrinks linearly with wear") {
  VehicleParams params;
  CHECK(allowed_lateral_accel(0.0, params) == doctest::Approx(params.a_max));
  CHECK(allowed_lateral_accel(1.0, params) == doctest::Approx(params.a_min));
  params.a_max = 20.0;
  params.a_min = 5.0;
  CHECK(allowed_lateral_accel(0.5, params) == doctest::Approx(12.5).epsilon(1e-12));
}

TEST_CASE("tire wear saturates exponentially in accumulated turning") {
  VehicleParams params;
  CHECK(update_tire_wear(0.0, params) == doctest::Approx(0.0));
  params.wear_rate = 0.0;
  CHECK(update_tire_wear(500.0, params) == doctest::Approx(0.0));
  params.wear_rate = 0.01;
  CHECK(update_tire_wear(100.0, params) ==
        doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("wear and grip agree through the shared curve") {
  const VehicleParams params;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> turn(0.0, 400.0);
  for (int i = 0; i < 100; ++i) {
    const double accumulated = turn(rng);
    const double expected = params.a_max - (params.a_max - params.a_min) *
                                               (1.0 - std::exp(-params.wear_rate * accumulated));
    CHECK(allowed_lateral_accel(update_tire_wear(accumulated, params), params) ==
          doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("control clamp: longitudinal box and the speed-scaled yaw bound") {
  VehicleParams params;
  params.a_max = 20.0;
  params.a_min = 5.0;
  ContinuousState s = state_at({0.0, 0.0}, 20.0, 0.0);

  CHECK(clamp_control(s, {-2.0 * params.b, 0.0}, params).accel == doctest::Approx(-params.b));
  CHECK(clamp_control(s, {100.0, 0.0}, params).accel == doctest::Approx(params.a));
  CHECK(clamp_control(s, {3.0, 0.2}, params).accel == doctest::Approx(3.0));

  // At 20 m/s with fresh tires and a 20 m/s^2 budget the yaw cap is 1 rad/s.
  CHECK(clamp_control(s, {0.0, 3.0}, params).yaw_rate == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(clamp_control(s, {0.0, -3.0}, params).yaw_rate == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(clamp_control(s, {0.0, 0.4}, params).yaw_rate == doctest::Approx(0.4));

  // Worn tires tighten the same bound.
  s.tire_wear = 0.5;
  CHECK(clamp_control(s, {0.0, 3.0}, params).yaw_rate ==
        doctest::Approx(12.5 / 20.0).epsilon(1e-12));

  // At standstill the lateral constraint degenerates; a fixed bound applies.
  s.velocity = 0.0;
  CHECK(clamp_control(s, {0.0, 5.0}, params).yaw_rate == doctest::Approx(kZeroSpeedYawBound));
}

TEST_CASE("linearization entries at the axis-aligned headings") {
  ContinuousState s = state_at({0.0, 0.0}, 10.0, 0.0);
  LinearDynamics lin = linearize(s, 0.02);
  CHECK(lin.a[0][2] == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(lin.a[0][3] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(lin.a[1][3] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(lin.b[2][0] == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(lin.b[3][1] == doctest::Approx(0.02).epsilon(1e-12));

  s.heading = kPi / 2.0;
  lin = linearize(s, 0.02);
  CHECK(lin.a[0][2] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(lin.a[0][3] == doctest::Approx(-0.2).epsilon(1e-12));
}

TEST_CASE("jacobians match central finite differences") {
  const VehicleParams params;
  const double dt = 0.02;
  const double h = 1e-4;
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> pos(-50.0, 50.0);
  std::uniform_real_distribution<double> vel(0.5, 23.0);
  std::uniform_real_distribution<double> ang(-kPi, kPi);

  auto pack = [](const ContinuousState& s, int i) {
    switch (i) {
      case 0: return s.position.x;
      case 1: return s.position.y;
      case 2: return s.velocity;
      default: return s.heading;
    }
  };
  auto nudge = [](ContinuousState s, int i, double delta) {
    switch (i) {
      case 0: s.position.x += delta; break;
      case 1: s.position.y += delta; break;
      case 2: s.velocity += delta; break;
      default: s.heading += delta; break;
    }
    return s;
  };

  for (int trial = 0; trial < 100; ++trial) {
    const ContinuousState s = state_at({pos(rng), pos(rng)}, vel(rng), ang(rng));
    const LinearDynamics lin = linearize(s, dt);
    for (int col = 0; col < 4; ++col) {
      const ContinuousState hi = step(nudge(s, col, h), {0.0, 0.0}, dt, params);
      const ContinuousState lo = step(nudge(s, col, -h), {0.0, 0.0}, dt, params);
      for (int row = 0; row < 4; ++row) {
        const double fd = (pack(hi, row) - pack(lo, row)) / (2.0 * h);
        CHECK(std::abs(fd - lin.a[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)]) <
              1e-6);
      }
    }
    for (int col = 0; col < 2; ++col) {
      ControlInput up;
      ControlInput dn;
      (col == 0 ? up.accel : up.yaw_rate) = h;
      (col == 0 ? dn.accel : dn.yaw_rate) = -h;
      const ContinuousState hi = step(s, up, dt, params);
      const ContinuousState lo = step(s, dn, dt, params);
      for (int row = 0; row < 4; ++row) {
        const double fd = (pack(hi, row) - pack(lo, row)) / (2.0 * h);
        CHECK(std::abs(fd - lin.b[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)]) <
              1e-6);
      }
    }
  }
}

TEST_CASE("state invariants hold along a random driven trajectory") {
  const VehicleParams params;
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> accel(-15.0, 10.0);
  std::uniform_real_distribution<double> yaw(-2.0, 2.0);
  ContinuousState s = state_at({0.0, 0.0}, 5.0, 0.3);
  double prev_wear = s.tire_wear;
  for (int i = 0; i < 500; ++i) {
    const ControlInput u = clamp_control(s, {accel(rng), yaw(rng)}, params);
    CHECK(u.accel >= -params.b);
    CHECK(u.accel <= params.a);
    CHECK(std::abs(u.yaw_rate) * std::max(s.velocity, 1e-6) <=
          allowed_lateral_accel(s.tire_wear, params) + 1e-9);
    s = step(s, u, 0.02, params);
    CHECK(s.velocity >= 0.0);
    CHECK(s.velocity <= params.v_max);
    CHECK(s.tire_wear >= prev_wear);
    CHECK(s.tire_wear < 1.0);
    prev_wear = s.tire_wear;
  }
}

TEST_CASE("one Euler step is second-order against a fine integration") {
  const VehicleParams params;
  const ControlInput u{2.0, 0.5};
  const ContinuousState s = state_at({1.0, -2.0}, 10.0, 0.3);
  const double dt = 0.02;
  const double defect_full =
      state_gap(fine_flow(s, u, dt, 4096, params), step(s, u, dt, params));
  const double defect_half =
      state_gap(fine_flow(s, u, dt / 2.0, 4096, params), step(s, u, dt / 2.0, params));
  CHECK(defect_full / defect_half >= 3.0);
}

}  // TEST_SUITE
