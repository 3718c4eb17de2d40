#pragma once
#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "teamrace/mcts_planner.hpp"
#include "teamrace/vehicle_dynamics.hpp"

namespace teamrace {

struct LqngWeights {
  double rho_position = 5.0;   // waypoint (x, y) tracking
  double rho_velocity = 10.0;  // waypoint speed tracking
  double rho_heading = 10.0;   // waypoint heading tracking
  double rho_teammate = 1.0;   // weight on teammates reaching their targets
  double rho_opponent = 1.0;   // weight against opponents reaching theirs
  double rho_collision = 2.0;  // pairwise separation reward
  double rho_control = 0.1;    // control regularization, must stay positive

  void validate() const;
};

// Finite-horizon linear-quadratic game over the stacked state of all modeled
// players. State costs are charged on x_1..x_H, control costs on u_0..u_{H-1}.
struct LqGameProblem {
  int horizon = 1;
  Eigen::MatrixXd A;                // joint transition
  std::vector<Eigen::MatrixXd> B;   // per player, joint rows
  std::vector<Eigen::MatrixXd> Q;   // per player, joint quadratic state cost
  std::vector<Eigen::VectorXd> q;   // per player, linear state cost
  std::vector<Eigen::MatrixXd> R;   // per player, own-control cost
};

struct NashSolution {
  // gains[i][t] applies to the joint state: u_i = -K x - k.
  std::vector<std::vector<Eigen::MatrixXd>> K;
  std::vector<std::vector<Eigen::VectorXd>> k;
};

// Stacks unicycle linearizations and the tracking / teammate / opponent /
// separation quadratics around one waypoint per seat. Targets must exist for
// every seat.
LqGameProblem build_costs(const std::vector<ContinuousState>& states, int ego_seat,
                          const std::vector<int>& team_of,
                          const std::vector<std::optional<PlanWaypoint>>& targets,
                          const LqngWeights& weights, double dt, int horizon);

// Backward coupled-Riccati recursion; throws IllPosedGameError when the
// stacked best-response system is singular at any step.
NashSolution solve_coupled_riccati(const LqGameProblem& problem);

// First-step policy of one seat, clamped to the vehicle envelope.
ControlInput compute_control(const NashSolution& solution, const Eigen::VectorXd& joint_state,
                             int ego_seat, const ContinuousState& ego_state,
                             const VehicleParams& params);

// First waypoint strictly ahead of the ego's last checkpoint; a fully
// consumed plan keeps steering at its final waypoint.
PlanWaypoint select_target_waypoint(const std::vector<PlanWaypoint>& plan,
                                    const ContinuousState& ego);

Eigen::VectorXd stack_states(const std::vector<ContinuousState>& states);

}  // namespace teamrace
