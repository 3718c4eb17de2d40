#include "teamrace/lqng_planner.hpp"

#include <stdexcept>
#include <string>

#include "teamrace/util.hpp"

namespace teamrace {
namespace {
constexpr int kStateDim = 4;
constexpr int kControlDim = 2;
}

void LqngWeights::validate() const {
  if (!(rho_control > 0.0)) throw ConfigError("rho_control must be positive");
  for (const double w : {rho_position, rho_velocity, rho_heading, rho_teammate, rho_opponent,
                         rho_collision}) {
    if (!(w >= 0.0)) throw ConfigError("lqng weights must be >= 0");
  }
}

Eigen::VectorXd stack_states(const std::vector<ContinuousState>& states) {
  Eigen::VectorXd x(kStateDim * static_cast<int>(states.size()));
  for (int i = 0; i < static_cast<int>(states.size()); ++i) {
    const ContinuousState& s = states[static_cast<std::size_t>(i)];
    x.segment<kStateDim>(i * kStateDim) << s.position.x, s.position.y, s.velocity, s.heading;
  }
  return x;
}

LqGameProblem build_costs(const std::vector<ContinuousState>& states, int ego_seat,
                          const std::vector<int>& team_of,
                          const std::vector<std::optional<PlanWaypoint>>& targets,
                          const LqngWeights& weights, double dt, int horizon) {
  weights.validate();
  const int n = static_cast<int>(states.size());
  const int joint = n * kStateDim;
  LqGameProblem problem;
  problem.horizon = horizon;
  problem.A = Eigen::MatrixXd::Zero(joint, joint);
  for (int i = 0; i < n; ++i) {
    const LinearDynamics lin = linearize(states[static_cast<std::size_t>(i)], dt);
    Eigen::MatrixXd bi = Eigen::MatrixXd::Zero(joint, kControlDim);
    for (int r = 0; r < kStateDim; ++r) {
      for (int c = 0; c < kStateDim; ++c)
        problem.A(i * kStateDim + r, i * kStateDim + c) =
            lin.a[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      for (int c = 0; c < kControlDim; ++c)
        bi(i * kStateDim + r, c) = lin.b[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
    problem.B.push_back(bi);
  }

  if (ego_seat < 0 || ego_seat >= n) throw ConfigError("ego seat out of range");
  for (int j = 0; j < n; ++j) {
    if (!targets[static_cast<std::size_t>(j)])
      throw ConfigError("missing waypoint for player " + std::to_string(j));
  }

  // One objective per seat: own tracking at weight 1, teammates helped,
  // opponents hindered, and a concave separation reward against everyone.
  const Eigen::Vector4d diag(weights.rho_position, weights.rho_position, weights.rho_velocity,
                             weights.rho_heading);
  for (int owner = 0; owner < n; ++owner) {
    Eigen::MatrixXd qm = Eigen::MatrixXd::Zero(joint, joint);
    Eigen::VectorXd qv = Eigen::VectorXd::Zero(joint);
    for (int j = 0; j < n; ++j) {
      const PlanWaypoint& wp = *targets[static_cast<std::size_t>(j)];
      double tracking = 1.0;
      if (j != owner) {
        tracking = team_of[static_cast<std::size_t>(j)] == team_of[static_cast<std::size_t>(owner)]
                       ? weights.rho_teammate
                       : -weights.rho_opponent;
      }
      // Heading target shifted to the branch nearest the current heading, so
      // the quadratic never pulls the long way around the circle.
      const double theta_now = states[static_cast<std::size_t>(j)].heading;
      const Eigen::Vector4d target(wp.position.x, wp.position.y, wp.target_velocity,
                                   theta_now + wrap_angle(wp.heading - theta_now));
      const int base = j * kStateDim;
      for (int d = 0; d < kStateDim; ++d) {
        qm(base + d, base + d) += tracking * diag(d);
        qv(base + d) += -tracking * diag(d) * target(d);
      }
      if (j != owner) {
        const int self = owner * kStateDim;
        const int other = j * kStateDim;
        for (int d = 0; d < 2; ++d) {
          qm(self + d, self + d) -= weights.rho_collision;
          qm(other + d, other + d) -= weights.rho_collision;
          qm(self + d, other + d) += weights.rho_collision;
          qm(other + d, self + d) += weights.rho_collision;
        }
      }
    }
    problem.Q.push_back(qm);
    problem.q.push_back(qv);
    problem.R.push_back(weights.rho_control *
                        Eigen::MatrixXd::Identity(kControlDim, kControlDim));
  }
  return problem;
}

NashSolution solve_coupled_riccati(const LqGameProblem& problem) {
  const int n = static_cast<int>(problem.B.size());
  const int joint = static_cast<int>(problem.A.rows());
  std::vector<int> nu(static_cast<std::size_t>(n));
  std::vector<int> offset(static_cast<std::size_t>(n));
  int total_u = 0;
  for (int i = 0; i < n; ++i) {
    nu[static_cast<std::size_t>(i)] = static_cast<int>(problem.B[static_cast<std::size_t>(i)].cols());
    offset[static_cast<std::size_t>(i)] = total_u;
    total_u += nu[static_cast<std::size_t>(i)];
  }

  std::vector<Eigen::MatrixXd> Z;
  std::vector<Eigen::VectorXd> zeta;
  for (int i = 0; i < n; ++i) {
    Z.push_back(problem.Q[static_cast<std::size_t>(i)]);
    zeta.push_back(problem.q[static_cast<std::size_t>(i)]);
  }

  NashSolution solution;
  solution.K.assign(static_cast<std::size_t>(n),
                    std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(problem.horizon)));
  solution.k.assign(static_cast<std::size_t>(n),
                    std::vector<Eigen::VectorXd>(static_cast<std::size_t>(problem.horizon)));

  for (int t = problem.horizon - 1; t >= 0; --t) {
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(total_u, total_u);
    Eigen::MatrixXd Yx = Eigen::MatrixXd::Zero(total_u, joint);
    Eigen::VectorXd Yc = Eigen::VectorXd::Zero(total_u);
    for (int i = 0; i < n; ++i) {
      const std::size_t si = static_cast<std::size_t>(i);
      const Eigen::MatrixXd BtZ = problem.B[si].transpose() * Z[si];
      for (int j = 0; j < n; ++j) {
        const std::size_t sj = static_cast<std::size_t>(j);
        Eigen::MatrixXd block = BtZ * problem.B[sj];
        if (i == j) block += problem.R[si];
        S.block(offset[si], offset[sj], nu[si], nu[sj]) = block;
      }
      Yx.block(offset[si], 0, nu[si], joint) = BtZ * problem.A;
      Yc.segment(offset[si], nu[si]) = problem.B[si].transpose() * zeta[si];
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(S);
    if (!lu.isInvertible()) throw IllPosedGameError("ill-posed game: singular control coupling");
    const Eigen::MatrixXd P = lu.solve(Yx);
    const Eigen::VectorXd alpha = lu.solve(Yc);

    Eigen::MatrixXd F = problem.A;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(joint);
    for (int i = 0; i < n; ++i) {
      const std::size_t si = static_cast<std::size_t>(i);
      solution.K[si][static_cast<std::size_t>(t)] = P.block(offset[si], 0, nu[si], joint);
      solution.k[si][static_cast<std::size_t>(t)] = alpha.segment(offset[si], nu[si]);
      F -= problem.B[si] * solution.K[si][static_cast<std::size_t>(t)];
      beta -= problem.B[si] * solution.k[si][static_cast<std::size_t>(t)];
    }
    for (int i = 0; i < n; ++i) {
      const std::size_t si = static_cast<std::size_t>(i);
      const Eigen::MatrixXd& Ki = solution.K[si][static_cast<std::size_t>(t)];
      const Eigen::VectorXd& ki = solution.k[si][static_cast<std::size_t>(t)];
      const Eigen::MatrixXd Z_next = Z[si];
      const Eigen::VectorXd zeta_next = zeta[si];
      Z[si] = problem.Q[si] + Ki.transpose() * problem.R[si] * Ki +
              F.transpose() * Z_next * F;
      zeta[si] = F.transpose() * (zeta_next + Z_next * beta) + problem.q[si] +
                 Ki.transpose() * problem.R[si] * ki;
    }
  }
  return solution;
}

ControlInput compute_control(const NashSolution& solution, const Eigen::VectorXd& joint_state,
                             int ego_seat, const ContinuousState& ego_state,
                             const VehicleParams& params) {
  const std::size_t seat = static_cast<std::size_t>(ego_seat);
  const Eigen::VectorXd u = -solution.K[seat][0] * joint_state - solution.k[seat][0];
  return clamp_control(ego_state, {u(0), u(1)}, params);
}

PlanWaypoint select_target_waypoint(const std::vector<PlanWaypoint>& plan,
                                    const ContinuousState& ego) {
  if (plan.empty()) throw std::invalid_argument("select_target_waypoint: empty plan");
  for (const PlanWaypoint& wp : plan) {
    if (wp.checkpoint > ego.last_checkpoint) return wp;
  }
  return plan.back();
}

}  // namespace teamrace
