#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "objflow/trajopt/cost.hpp"

namespace objflow {

struct LmOptions {
  double initial_damping = 1e-3;  // relative to the largest Gauss-Newton diagonal entry
  double damping_factor = 10.0;
  int max_iterations = 300;
  double gradient_tol = 1e-8;
  double step_tol = 1e-12;          // relative step norm counted as converged
  double stall_decrease = 1e-10;    // relative decrease treated as no progress
  int stall_iterations = 10;
};

struct JointTrajectory {
  Eigen::MatrixXd configurations;  // H x DOF, radians
  double dt = 0.1;                 // seconds per step

  Eigen::Index steps() const { return configurations.rows(); }
};

struct TrajoptResult {
  JointTrajectory trajectory;
  std::vector<RigidTransform> ee_poses;
  CostBreakdown costs;
  bool converged = false;
  int iterations = 0;
  std::string stop_reason;
  std::vector<double> cost_history;  // accepted iterates only
};

/// Levenberg-Marquardt over the stacked trajectory. Accepted steps never
/// increase the cost; the best iterate is always returned. Converged means the
/// gradient or step fell below tolerance, or `stall_iterations` damped steps in
/// a row failed to lower the cost measurably. A singular system is not.
inline TrajoptResult minimize_lm(const FlowTrackingProblem& problem, Eigen::VectorXd x, const LmOptions& opts = {}) {
  const int d = problem.dof();
  BlockTridiagonal hess(problem.horizon(), d);
  Eigen::VectorXd grad, step;
  double cost = problem.linearize(x, &hess, &grad);

  double max_diag = 0.0;
  for (const auto& b : hess.diag) max_diag = std::max(max_diag, b.diagonal().maxCoeff());
  double damping = opts.initial_damping * std::max(max_diag, 1e-12);

  TrajoptResult res;
  res.cost_history.push_back(cost);
  int stall = 0;
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    if (grad.cwiseAbs().maxCoeff() < opts.gradient_tol) {
      res.converged = true;
      res.stop_reason = "gradient-tolerance";
      break;
    }
    if (!hess.solve(damping, -grad, step)) {
      damping *= opts.damping_factor;
      if (++stall >= opts.stall_iterations) {
        res.stop_reason = "singular";
        break;
      }
      continue;
    }
    const Eigen::VectorXd candidate = x + step;
    const double new_cost = problem.cost(candidate);
    const double decrease = cost - new_cost;
    if (std::isfinite(new_cost) && decrease > 0.0) {
      const bool tiny_step = step.norm() <= opts.step_tol * (x.norm() + opts.step_tol);
      x = candidate;
      cost = problem.linearize(x, &hess, &grad);
      res.cost_history.push_back(cost);
      damping = std::max(damping / opts.damping_factor, 1e-15);
      stall = decrease < opts.stall_decrease * std::max(std::abs(cost), 1e-300) ? stall + 1 : 0;
      if (tiny_step) {
        res.converged = true;
        res.stop_reason = "step-tolerance";
        ++it;
        break;
      }
    } else {
      damping *= opts.damping_factor;
      ++stall;
    }
    if (stall >= opts.stall_iterations) {
      res.converged = true;
      res.stop_reason = "no-decrease";
      ++it;
      break;
    }
  }
  if (res.stop_reason.empty()) res.stop_reason = "max-iterations";
  res.iterations = it;
  res.trajectory.configurations.resize(problem.horizon(), d);
  for (int t = 0; t < problem.horizon(); ++t) res.trajectory.configurations.row(t) = problem.config(x, t).transpose();
  res.ee_poses = problem.ee_poses(x);
  res.costs = problem.evaluate(x);
  return res;
}

/// Seed trajectory that holds `q0` for the whole horizon.
inline Eigen::VectorXd constant_seed(const Eigen::VectorXd& q0, int horizon) {
  return q0.replicate(horizon, 1);
}

/// Optimize a joint trajectory so grasped points follow the flow.
inline TrajoptResult optimize_trajectory(const RobotModel& model, const ObjectFlow3D& flow, const RigidTransform& grasp,
                                         const std::vector<Eigen::Index>& grasped, const CostWeights& weights,
                                         const Eigen::VectorXd& seed, int horizon, const LmOptions& opts = {}) {
  const FlowTrackingProblem problem(model, flow, grasp, grasped, weights, horizon);
  Eigen::VectorXd x0;
  if (seed.size() == model.dof()) {
    x0 = constant_seed(seed, horizon);
  } else if (seed.size() == problem.size()) {
    x0 = seed;
  } else {
    throw Error(ErrorKind::kInvalidArgument, "seed must be one configuration or a full stacked trajectory");
  }
  return minimize_lm(problem, std::move(x0), opts);
}

}  // namespace objflow
