#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "teamrace/lqng_planner.hpp"
#include "teamrace/util.hpp"
#include "test_helpers.hpp"

using namespace teamrace;
using namespace teamrace::testing;

namespace {

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int rows, int cols, double scale) {
  std::uniform_real_distribution<double> pick(-scale, scale);
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = pick(rng);
  return m;
}

// Closed-loop rollout with a one-shot open-loop deviation by one player:
// everyone plays the feedback laws, player `who` adds `delta` to control
// coordinate `dim` at step `when`. Returns that player's accumulated cost.
double deviation_cost(const LqGameProblem& problem, const NashSolution& nash,
                      const Eigen::VectorXd& x0, int who, int when, int dim, double delta) {
  const int n = static_cast<int>(problem.B.size());
  Eigen::VectorXd x = x0;
  double cost = 0.0;
  for (int t = 0; t < problem.horizon; ++t) {
    std::vector<Eigen::VectorXd> u(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
      const std::size_t sj = static_cast<std::size_t>(j);
      u[sj] = -nash.K[sj][static_cast<std::size_t>(t)] * x -
              nash.k[sj][static_cast<std::size_t>(t)];
    }
    if (t == when) u[static_cast<std::size_t>(who)](dim) += delta;
    Eigen::VectorXd next = problem.A * x;
    for (int j = 0; j < n; ++j)
      next += problem.B[static_cast<std::size_t>(j)] * u[static_cast<std::size_t>(j)];
    const std::size_t sw = static_cast<std::size_t>(who);
    cost += next.dot(problem.Q[sw] * next) + 2.0 * problem.q[sw].dot(next) +
            u[sw].dot(problem.R[sw] * u[sw]);
    x = next;
  }
  return cost;
}

ContinuousState parked(double x, double y, double v, double heading) {
  ContinuousState s;
  s.position = {x, y};
  s.velocity = v;
  s.heading = heading;
  return s;
}

PlanWaypoint waypoint_at(double x, double y, double v, double heading, int checkpoint = 1) {
  PlanWaypoint wp;
  wp.checkpoint = checkpoint;
  wp.position = {x, y};
  wp.target_velocity = v;
  wp.heading = heading;
  return wp;
}

}  // namespace

TEST_SUITE("lqng_planner") {

TEST_CASE("single player reduces to the textbook tracking regulator") {
  std::mt19937_64 rng(31);
  const int dim = 3;
  const int nu = 2;
  const int horizon = 5;

  LqGameProblem problem;
  problem.horizon = horizon;
  problem.A = random_matrix(rng, dim, dim, 0.8);
  problem.B = {random_matrix(rng, dim, nu, 1.0)};
  const Eigen::MatrixXd M = random_matrix(rng, dim, dim, 1.0);
  problem.Q = {M.transpose() * M};
  problem.q = {random_matrix(rng, dim, 1, 1.0)};
  problem.R = {0.3 * Eigen::MatrixXd::Identity(nu, nu)};

  const NashSolution nash = solve_coupled_riccati(problem);

  // Independent Riccati sweep for min sum of x'Qx + 2q'x + u'Ru on arrivals.
  Eigen::MatrixXd P = problem.Q[0];
  Eigen::VectorXd p = problem.q[0];
  std::vector<Eigen::MatrixXd> K(horizon);
  std::vector<Eigen::VectorXd> k(horizon);
  for (int t = horizon - 1; t >= 0; --t) {
    const Eigen::MatrixXd& B = problem.B[0];
    const Eigen::MatrixXd S = problem.R[0] + B.transpose() * P * B;
    K[static_cast<std::size_t>(t)] = S.ldlt().solve(B.transpose() * P * problem.A);
    k[static_cast<std::size_t>(t)] = S.ldlt().solve(B.transpose() * p);
    const Eigen::MatrixXd F = problem.A - B * K[static_cast<std::size_t>(t)];
    const Eigen::VectorXd beta = -B * k[static_cast<std::size_t>(t)];
    const Eigen::MatrixXd P_next = P;
    const Eigen::VectorXd p_next = p;
    P = problem.Q[0] + K[static_cast<std::size_t>(t)].transpose() * problem.R[0] *
                           K[static_cast<std::size_t>(t)] +
        F.transpose() * P_next * F;
    p = F.transpose() * (p_next + P_next * beta) + problem.q[0] +
        K[static_cast<std::size_t>(t)].transpose() * problem.R[0] *
            k[static_cast<std::size_t>(t)];
  }
  for (int t = 0; t < horizon; ++t) {
    CHECK((nash.K[0][static_cast<std::size_t>(t)] - K[static_cast<std::size_t>(t)])
              .cwiseAbs()
              .maxCoeff() < 1e-9);
    CHECK((nash.k[0][static_cast<std::size_t>(t)] - k[static_cast<std::size_t>(t)])
              .cwiseAbs()
              .maxCoeff() < 1e-9);
  }
}

TEST_CASE("one-step scalar duel matches the hand-solved equilibrium") {
  const double a = 1.1, b1 = 0.7, b2 = -0.5, x0 = 1.3;
  const double Q1 = 2.0, q1 = -1.0, R1 = 0.4;
  const double Q2 = 1.5, q2 = 0.8, R2 = 0.6;

  LqGameProblem problem;
  problem.horizon = 1;
  problem.A = Eigen::MatrixXd::Constant(1, 1, a);
  problem.B = {Eigen::MatrixXd::Constant(1, 1, b1), Eigen::MatrixXd::Constant(1, 1, b2)};
  problem.Q = {Eigen::MatrixXd::Constant(1, 1, Q1), Eigen::MatrixXd::Constant(1, 1, Q2)};
  problem.q = {Eigen::VectorXd::Constant(1, q1), Eigen::VectorXd::Constant(1, q2)};
  problem.R = {Eigen::MatrixXd::Constant(1, 1, R1), Eigen::MatrixXd::Constant(1, 1, R2)};

  // Simultaneous best responses: (R_i + b_i^2 Q_i) u_i + b_i Q_i b_j u_j
  //   = -b_i (Q_i a x0 + q_i), solved by Cramer's rule.
  const double a11 = R1 + b1 * b1 * Q1, a12 = b1 * Q1 * b2;
  const double a21 = b2 * Q2 * b1, a22 = R2 + b2 * b2 * Q2;
  const double c1 = -b1 * (Q1 * a * x0 + q1);
  const double c2 = -b2 * (Q2 * a * x0 + q2);
  const double det = a11 * a22 - a12 * a21;
  const double u1_star = (c1 * a22 - a12 * c2) / det;
  const double u2_star = (a11 * c2 - c1 * a21) / det;

  const NashSolution nash = solve_coupled_riccati(problem);
  Eigen::VectorXd x(1);
  x << x0;
  const double u1 = (-nash.K[0][0] * x - nash.k[0][0])(0);
  const double u2 = (-nash.K[1][0] * x - nash.k[1][0])(0);
  CHECK(u1 == doctest::Approx(u1_star).epsilon(1e-10));
  CHECK(u2 == doctest::Approx(u2_star).epsilon(1e-10));

  // No profitable unilateral deviation on a fine grid around the equilibrium.
  auto cost = [&](int who, double own, double other) {
    const double x1 = a * x0 + (who == 0 ? b1 * own + b2 * other : b1 * other + b2 * own);
    const double Q = who == 0 ? Q1 : Q2;
    const double q = who == 0 ? q1 : q2;
    const double R = who == 0 ? R1 : R2;
    return Q * x1 * x1 + 2.0 * q * x1 + R * own * own;
  };
  const double j1_star = cost(0, u1, u2);
  const double j2_star = cost(1, u2, u1);
  for (double d = -2.0; d <= 2.0; d += 1e-3) {
    CHECK(cost(0, u1 + d, u2) >= j1_star - 1e-9);
    CHECK(cost(1, u2 + d, u1) >= j2_star - 1e-9);
  }
}

TEST_CASE("no profitable one-shot deviation in a random three-player game") {
  std::mt19937_64 rng(97);
  const int joint = 5;
  const std::vector<int> nu{2, 1, 2};
  LqGameProblem problem;
  problem.horizon = 4;
  problem.A = random_matrix(rng, joint, joint, 0.5);
  for (int i = 0; i < 3; ++i) {
    problem.B.push_back(random_matrix(rng, joint, nu[static_cast<std::size_t>(i)], 0.8));
    const Eigen::MatrixXd M = random_matrix(rng, joint, joint, 0.7);
    problem.Q.push_back(M.transpose() * M);
    problem.q.push_back(random_matrix(rng, joint, 1, 1.0));
    problem.R.push_back((0.4 + 0.2 * i) * Eigen::MatrixXd::Identity(
                                              nu[static_cast<std::size_t>(i)],
                                              nu[static_cast<std::size_t>(i)]));
  }
  const NashSolution nash = solve_coupled_riccati(problem);
  const Eigen::VectorXd x0 = random_matrix(rng, joint, 1, 1.0);

  const double h = 1e-4;
  for (int who = 0; who < 3; ++who) {
    for (int when = 0; when < problem.horizon; ++when) {
      for (int dim = 0; dim < nu[static_cast<std::size_t>(who)]; ++dim) {
        const double up = deviation_cost(problem, nash, x0, who, when, dim, h);
        const double down = deviation_cost(problem, nash, x0, who, when, dim, -h);
        CHECK(std::abs(up - down) / (2.0 * h) < 1e-6);
        // Quadratic in the deviation, so the midpoint must be the low point.
        const double base = deviation_cost(problem, nash, x0, who, when, dim, 0.0);
        CHECK(up >= base - 1e-12);
        CHECK(down >= base - 1e-12);
      }
    }
  }
}

TEST_CASE("zero state costs silence the controller") {
  std::mt19937_64 rng(7);
  LqGameProblem problem;
  problem.horizon = 3;
  problem.A = random_matrix(rng, 4, 4, 1.0);
  for (int i = 0; i < 2; ++i) {
    problem.B.push_back(random_matrix(rng, 4, 2, 1.0));
    problem.Q.push_back(Eigen::MatrixXd::Zero(4, 4));
    problem.q.push_back(Eigen::VectorXd::Zero(4));
    problem.R.push_back(Eigen::MatrixXd::Identity(2, 2));
  }
  const NashSolution nash = solve_coupled_riccati(problem);
  for (int i = 0; i < 2; ++i) {
    for (int t = 0; t < 3; ++t) {
      CHECK(nash.K[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)].norm() == 0.0);
      CHECK(nash.k[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)].norm() == 0.0);
    }
  }
}

TEST_CASE("a singular control coupling is reported, not inverted") {
  LqGameProblem problem;
  problem.horizon = 1;
  problem.A = Eigen::MatrixXd::Identity(1, 1);
  problem.B = {Eigen::MatrixXd::Zero(1, 1)};
  problem.Q = {Eigen::MatrixXd::Identity(1, 1)};
  problem.q = {Eigen::VectorXd::Zero(1)};
  problem.R = {Eigen::MatrixXd::Zero(1, 1)};
  CHECK_THROWS_AS((void)solve_coupled_riccati(problem), IllPosedGameError);
}

TEST_CASE("tracking costs: own, teammate, and opponent blocks") {
  LqngWeights weights;
  weights.rho_position = 1.0;
  weights.rho_velocity = 2.0;
  weights.rho_heading = 4.0;
  weights.rho_teammate = 0.5;
  weights.rho_opponent = 3.0;
  weights.rho_collision = 0.0;
  weights.rho_control = 0.1;

  const std::vector<ContinuousState> states{parked(0, 0, 5, 0), parked(10, 1, 6, 0),
                                            parked(20, -1, 7, 0)};
  const std::vector<int> team_of{0, 0, 1};
  const std::vector<std::optional<PlanWaypoint>> targets{
      waypoint_at(12, 0, 8, 0.0), waypoint_at(22, 2, 9, 0.0), waypoint_at(30, -2, 10, 0.0)};

  const LqGameProblem problem =
      build_costs(states, 0, team_of, targets, weights, 0.02, 5);
  REQUIRE(problem.Q.size() == 3);
  REQUIRE(problem.horizon == 5);

  const Eigen::Vector4d diag(1.0, 1.0, 2.0, 4.0);
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(12, 12);
  Eigen::VectorXd expected_q = Eigen::VectorXd::Zero(12);
  const double scale[3] = {1.0, 0.5, -3.0};
  const double tx[3] = {12, 22, 30}, ty[3] = {0, 2, -2}, tv[3] = {8, 9, 10};
  for (int j = 0; j < 3; ++j) {
    const Eigen::Vector4d target(tx[j], ty[j], tv[j], 0.0);
    for (int d = 0; d < 4; ++d) {
      expected(4 * j + d, 4 * j + d) = scale[j] * diag(d);
      expected_q(4 * j + d) = -scale[j] * diag(d) * target(d);
    }
  }
  CHECK((problem.Q[0] - expected).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((problem.q[0] - expected_q).cwiseAbs().maxCoeff() < 1e-12);

  // The opponent's own objective mirrors the team split from its side.
  CHECK(problem.Q[2](0, 0) == doctest::Approx(-3.0));   // ego hindered
  CHECK(problem.Q[2](8, 8) == doctest::Approx(1.0));    // own tracking
  CHECK(problem.Q[2](4, 4) == doctest::Approx(-3.0));   // ego's teammate hindered

  // Control cost is a plain ridge for every seat.
  for (int i = 0; i < 3; ++i)
    CHECK((problem.R[static_cast<std::size_t>(i)] -
           0.1 * Eigen::MatrixXd::Identity(2, 2))
              .cwiseAbs()
              .maxCoeff() == 0.0);
}

TEST_CASE("separation term is a concave penalty on pairwise distance") {
  LqngWeights weights;
  weights.rho_position = 0.0;
  weights.rho_velocity = 0.0;
  weights.rho_heading = 0.0;
  weights.rho_teammate = 0.0;
  weights.rho_opponent = 0.0;
  weights.rho_collision = 2.0;
  weights.rho_control = 0.1;

  const std::vector<ContinuousState> states{parked(0, 0, 5, 0), parked(4, 1, 5, 0),
                                            parked(9, -2, 5, 0)};
  const std::vector<int> team_of{0, 0, 1};
  const std::vector<std::optional<PlanWaypoint>> targets{
      waypoint_at(1, 0, 5, 0), waypoint_at(5, 1, 5, 0), waypoint_at(10, -2, 5, 0)};
  const LqGameProblem problem =
      build_costs(states, 0, team_of, targets, weights, 0.02, 3);

  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd x = random_matrix(rng, 12, 1, 3.0);
    double expected = 0.0;
    for (int j = 1; j < 3; ++j) {
      const double dx = x(0) - x(4 * j + 0);
      const double dy = x(1) - x(4 * j + 1);
      expected += -2.0 * (dx * dx + dy * dy);
    }
    CHECK(x.dot(problem.Q[0] * x) == doctest::Approx(expected).epsilon(1e-12));
  }
  CHECK((problem.Q[0] - problem.Q[0].transpose()).norm() == 0.0);
  CHECK(problem.q[0].norm() == 0.0);
}

TEST_CASE("heading targets take the short way around the circle") {
  LqngWeights weights;
  weights.rho_collision = 0.0;
  const std::vector<ContinuousState> states{parked(0, 0, 5, 6.0)};
  const std::vector<int> team_of{0};
  const std::vector<std::optional<PlanWaypoint>> targets{waypoint_at(5, 0, 5, 0.1)};
  const LqGameProblem problem =
      build_costs(states, 0, team_of, targets, weights, 0.02, 1);
  const double branch = 6.0 + wrap_angle(0.1 - 6.0);
  CHECK(branch == doctest::Approx(0.1 + kTwoPi).epsilon(1e-12));
  CHECK(problem.q[0](3) == doctest::Approx(-weights.rho_heading * branch).epsilon(1e-12));
}

TEST_CASE("joint dynamics stack each seat's linearization on the diagonal") {
  LqngWeights weights;
  const std::vector<ContinuousState> states{parked(0, 0, 8, 0.3), parked(5, 2, 12, -0.7)};
  const std::vector<int> team_of{0, 1};
  const std::vector<std::optional<PlanWaypoint>> targets{waypoint_at(3, 0, 8, 0.3),
                                                         waypoint_at(8, 2, 12, -0.7)};
  const double dt = 0.02;
  const LqGameProblem problem = build_costs(states, 0, team_of, targets, weights, dt, 2);

  for (int i = 0; i < 2; ++i) {
    const LinearDynamics lin = linearize(states[static_cast<std::size_t>(i)], dt);
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 4; ++c)
        CHECK(problem.A(4 * i + r, 4 * i + c) ==
              doctest::Approx(lin.a[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]));
      for (int c = 0; c < 2; ++c)
        CHECK(problem.B[static_cast<std::size_t>(i)](4 * i + r, c) ==
              doctest::Approx(lin.b[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]));
    }
    // No cross-seat actuation or drift.
    CHECK(problem.B[static_cast<std::size_t>(i)]
              .block(4 * (1 - i), 0, 4, 2)
              .norm() == 0.0);
    CHECK(problem.A.block(4 * i, 4 * (1 - i), 4, 4).norm() == 0.0);
  }
}

TEST_CASE("cost builder rejects malformed requests") {
  LqngWeights weights;
  const std::vector<ContinuousState> states{parked(0, 0, 5, 0), parked(5, 0, 5, 0)};
  const std::vector<int> team_of{0, 1};
  std::vector<std::optional<PlanWaypoint>> targets{waypoint_at(3, 0, 5, 0), std::nullopt};
  expect_config_error(
      [&] { (void)build_costs(states, 0, team_of, targets, weights, 0.02, 3); },
      "waypoint");
  targets[1] = waypoint_at(8, 0, 5, 0);
  expect_config_error(
      [&] { (void)build_costs(states, 2, team_of, targets, weights, 0.02, 3); }, "seat");

  LqngWeights bad = weights;
  bad.rho_control = 0.0;
  expect_config_error(
      [&] { (void)build_costs(states, 0, team_of, targets, bad, 0.02, 3); }, "rho_control");
  bad = weights;
  bad.rho_opponent = -1.0;
  expect_config_error([&] { (void)build_costs(states, 0, team_of, targets, bad, 0.02, 3); },
                      ">= 0");
}

TEST_CASE("a kart parked on its own waypoint needs no correction") {
  LqngWeights weights;  // defaults, separation off for a lone kart anyway
  const ContinuousState me = parked(3.0, 2.0, 0.0, 0.7);
  const std::vector<ContinuousState> states{me};
  const std::vector<int> team_of{0};
  const std::vector<std::optional<PlanWaypoint>> targets{waypoint_at(3.0, 2.0, 0.0, 0.7)};
  const LqGameProblem problem =
      build_costs(states, 0, team_of, targets, weights, 0.02, 10);
  const NashSolution nash = solve_coupled_riccati(problem);
  const ControlInput u =
      compute_control(nash, stack_states(states), 0, me, VehicleParams{});
  CHECK(std::abs(u.accel) < 1e-9);
  CHECK(std::abs(u.yaw_rate) < 1e-9);
}

TEST_CASE("first-step policy is extracted per seat and clamped") {
  NashSolution nash;
  nash.K.resize(2);
  nash.k.resize(2);
  // Seat 0 demands far more than the envelope allows; seat 1 is gentle.
  Eigen::MatrixXd k0 = Eigen::MatrixXd::Zero(2, 8);
  k0(0, 0) = -30.0;
  k0(1, 1) = -2.0;
  nash.K[0] = {k0};
  nash.k[0] = {Eigen::VectorXd::Zero(2)};
  Eigen::MatrixXd k1 = Eigen::MatrixXd::Zero(2, 8);
  nash.K[1] = {k1};
  Eigen::VectorXd bias(2);
  bias << -1.5, 0.2;
  nash.k[1] = {bias};

  std::vector<ContinuousState> states{parked(1, 1, 10, 0), parked(5, 5, 10, 0)};
  const Eigen::VectorXd joint = stack_states(states);
  const VehicleParams params;

  // Raw request (30, 2): accel capped at a, yaw at allowed_lat / v = 1.5.
  const ControlInput u0 = compute_control(nash, joint, 0, states[0], params);
  CHECK(u0.accel == doctest::Approx(8.0));
  CHECK(u0.yaw_rate == doctest::Approx(1.5));

  // Raw request (1.5, -0.2) is inside the envelope and passes through.
  const ControlInput u1 = compute_control(nash, joint, 1, states[1], params);
  CHECK(u1.accel == doctest::Approx(1.5));
  CHECK(u1.yaw_rate == doctest::Approx(-0.2));
}

TEST_CASE("waypoint selection walks the plan by checkpoint progress") {
  std::vector<PlanWaypoint> plan{waypoint_at(10, 0, 5, 0, 3), waypoint_at(20, 0, 6, 0, 4),
                                 waypoint_at(30, 0, 7, 0, 5)};
  ContinuousState ego;
  ego.last_checkpoint = 0;
  CHECK(select_target_waypoint(plan, ego).checkpoint == 3);
  ego.last_checkpoint = 3;
  CHECK(select_target_waypoint(plan, ego).checkpoint == 4);
  ego.last_checkpoint = 7;
  CHECK(select_target_waypoint(plan, ego).checkpoint == 5);
  CHECK_THROWS_AS((void)select_target_waypoint({}, ego), std::invalid_argument);
}

TEST_CASE("gains stay finite across a wide tracking-weight sweep") {
  const std::vector<ContinuousState> states{parked(0, 0, 10, 0.1), parked(6, 1, 11, 0.0)};
  const std::vector<int> team_of{0, 1};
  const std::vector<std::optional<PlanWaypoint>> targets{waypoint_at(8, 0, 12, 0.1),
                                                         waypoint_at(14, 1, 12, 0.0)};
  for (const double rho : {0.0, 1e-3, 1.0, 10.0, 1000.0}) {
    LqngWeights weights;
    weights.rho_position = rho;
    const LqGameProblem problem =
        build_costs(states, 0, team_of, targets, weights, 0.02, 25);
    const NashSolution nash = solve_coupled_riccati(problem);
    for (std::size_t i = 0; i < 2; ++i) {
      REQUIRE(nash.K[i].size() == 25);
      for (const Eigen::MatrixXd& gain : nash.K[i]) CHECK(gain.allFinite());
      for (const Eigen::VectorXd& bias : nash.k[i]) CHECK(bias.allFinite());
    }
  }
}

TEST_CASE("stacked state vector preserves seat and field order") {
  const std::vector<ContinuousState> states{parked(1, 2, 3, 4), parked(5, 6, 7, 8)};
  const Eigen::VectorXd x = stack_states(states);
  REQUIRE(x.size() == 8);
  for (int i = 0; i < 8; ++i) CHECK(x(i) == doctest::Approx(static_cast<double>(i + 1)));
}

}  // TEST_SUITE
