#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "objflow/depthflow/types.hpp"
#include "objflow/kinematics/kinematics.hpp"

namespace objflow {

/// Weights of the flow-tracking objective.
struct CostWeights {
  double task = 10.0;            // w_f
  double reachability = 100.0;   // w_r
  double smoothness = 1.0;       // w_s
  double manipulability = 0.01;  // w_m

  void check() const {
    if (!(task >= 0.0 && reachability >= 0.0 && smoothness >= 0.0 && manipulability >= 0.0)) {
      throw Error(ErrorKind::kInvalidArgument, "cost weights must be non-negative");
    }
  }
};

/// Unweighted per-term totals and the weighted objective.
struct CostBreakdown {
  double task = 0.0;            // sum of squared point errors, m^2
  double reachability = 0.0;    // sum of squared limit violations, rad^2
  double smoothness = 0.0;      // m^2 + rad^2 between consecutive poses
  double manipulability = 0.0;  // -sum of Yoshikawa measures
  double total = 0.0;
};

/// Symmetric block-tridiagonal matrix: diag[t] is (t, t), lower[t] is (t, t-1).
struct BlockTridiagonal {
  std::vector<Eigen::MatrixXd> diag;
  std::vector<Eigen::MatrixXd> lower;  // lower[0] unused

  BlockTridiagonal(int blocks, int size)
      : diag(static_cast<std::size_t>(blocks), Eigen::MatrixXd::Zero(size, size)),
        lower(static_cast<std::size_t>(blocks), Eigen::MatrixXd::Zero(size, size)) {}

  /// Solve (A + damping I) x = b by block Cholesky. Returns false if not positive definite.
  bool solve(double damping, const Eigen::VectorXd& b, Eigen::VectorXd& x) const {
    const auto n = diag.size();
    const Eigen::Index d = diag.front().rows();
    std::vector<Eigen::LLT<Eigen::MatrixXd>> schur(n);
    std::vector<Eigen::VectorXd> y(n);
    for (std::size_t t = 0; t < n; ++t) {
      Eigen::MatrixXd s = diag[t] + damping * Eigen::MatrixXd::Identity(d, d);
      Eigen::VectorXd rhs = b.segment(static_cast<Eigen::Index>(t) * d, d);
      if (t > 0) {
        s -= lower[t] * schur[t - 1].solve(lower[t].transpose());
        rhs -= lower[t] * schur[t - 1].solve(y[t - 1]);
      }
      schur[t].compute(s);
      if (schur[t].info() != Eigen::Success) return false;
      y[t] = rhs;
    }
    x.resize(b.size());
    for (std::size_t t = n; t-- > 0;) {
      Eigen::VectorXd rhs = y[t];
      if (t + 1 < n) rhs -= lower[t + 1].transpose() * x.segment(static_cast<Eigen::Index>(t + 1) * d, d);
      x.segment(static_cast<Eigen::Index>(t) * d, d) = schur[t].solve(rhs);
    }
    return x.allFinite();
  }
};

/// Flow-tracking objective over a stacked joint trajectory x = [q_0; ...; q_{H-1}]:
///
///   sum_t  w_f sum_{i visible} |p_hat_i^t - P~_t[i]|^2 + w_r C_r(q_t)
///        + w_s C_s(q_t, q_{t-1}) - w_m manipulability(q_t)
///
/// P~_t is the flow frame round(t (T-1) / (H-1)); p_hat follows rigid-grasp
/// dynamics relative to `grasp`, using frame-0 positions as the initial points.
class FlowTrackingProblem {
 public:
  FlowTrackingProblem(RobotModel model, const ObjectFlow3D& flow, const RigidTransform& grasp,
                      const std::vector<Eigen::Index>& grasped, CostWeights weights, int horizon)
      : model_(std::move(model)), weights_(weights), horizon_(horizon) {
    weights_.check();
    if (horizon < 2) throw Error(ErrorKind::kInvalidArgument, "horizon must be at least 2");
    if (flow.frames() == 0 || flow.all_empty()) throw Error(ErrorKind::kNoTarget, "flow has no visible entries");
    if (grasped.empty()) throw Error(ErrorKind::kInvalidArgument, "grasped point set is empty");

    const Eigen::Index n = flow.points();
    std::vector<bool> is_grasped(static_cast<std::size_t>(n), false);
    for (Eigen::Index i : grasped) {
      if (i < 0 || i >= n) throw Error(ErrorKind::kInvalidArgument, "grasped index outside the flow");
      is_grasped[static_cast<std::size_t>(i)] = true;
    }
    const RigidTransform to_gripper = grasp.inverse();
    const PointSet3& p0 = flow.positions(0);
    targets_.resize(static_cast<std::size_t>(horizon));
    for (int t = 0; t < horizon; ++t) {
      const Eigen::Index k = flow_index(t, flow.frames());
      auto& tgt = targets_[static_cast<std::size_t>(t)];
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!flow.visible(0, i) || !flow.visible(k, i)) continue;
        if (is_grasped[static_cast<std::size_t>(i)]) {
          tgt.local.push_back(to_gripper * Eigen::Vector3d(p0.col(i)));
          tgt.target.push_back(flow.positions(k).col(i));
        } else {
          static_task_ += (p0.col(i) - flow.positions(k).col(i)).squaredNorm();
        }
      }
    }
  }

  static Eigen::Index flow_index(int t, Eigen::Index frames, int horizon) {
    if (horizon <= 1 || frames <= 1) return 0;
    return static_cast<Eigen::Index>(std::lround(static_cast<double>(t) * static_cast<double>(frames - 1) /
                                                 static_cast<double>(horizon - 1)));
  }
  Eigen::Index flow_index(int t, Eigen::Index frames) const { return flow_index(t, frames, horizon_); }

  int horizon() const { return horizon_; }
  int dof() const { return model_.dof(); }
  Eigen::Index size() const { return static_cast<Eigen::Index>(horizon_) * model_.dof(); }
  const RobotModel& model() const { return model_; }
  const CostWeights& weights() const { return weights_; }

  Eigen::VectorXd config(const Eigen::VectorXd& x, int t) const { return x.segment(static_cast<Eigen::Index>(t) * dof(), dof()); }

  std::vector<RigidTransform> ee_poses(const Eigen::VectorXd& x) const {
    std::vector<RigidTransform> out;
    for (int t = 0; t < horizon_; ++t) out.push_back(fk(model_, config(x, t)));
    return out;
  }

  CostBreakdown evaluate(const Eigen::VectorXd& x) const {
    check_size(x);
    CostBreakdown c;
    c.task = static_task_;
    Eigen::Matrix3d prev_r;
    Eigen::Vector3d prev_p;
    for (int t = 0; t < horizon_; ++t) {
      const Eigen::VectorXd q = config(x, t);
      const ChainFrames f = forward_frames(model_, q);
      const auto& tgt = targets_[static_cast<std::size_t>(t)];
      for (std::size_t k = 0; k < tgt.local.size(); ++k) c.task += (f.ee * tgt.local[k] - tgt.target[k]).squaredNorm();
      c.reachability += reachability_cost(model_, q);
      c.manipulability -= manipulability(jacobian(f));
      if (t > 0) {
        const double ang = so3::log(f.ee.rotation() * prev_r.transpose()).norm();
        c.smoothness += (f.ee.translation() - prev_p).squaredNorm() + ang * ang;
      }
      prev_r = f.ee.rotation();
      prev_p = f.ee.translation();
    }
    c.total = weights_.task * c.task + weights_.reachability * c.reachability + weights_.smoothness * c.smoothness +
              weights_.manipulability * c.manipulability;
    return c;
  }

  double cost(const Eigen::VectorXd& x) const { return evaluate(x).total; }

  /// Gradient of cost() and the Gauss-Newton approximation 2 J^T J of its
  /// least-squares part (the manipulability term contributes gradient only).
  double linearize(const Eigen::VectorXd& x, BlockTridiagonal* hessian, Eigen::VectorXd* gradient) const {
    check_size(x);
    const int d = dof();
    gradient->setZero(size());
    for (auto& b : hessian->diag) b.setZero();
    for (auto& b : hessian->lower) b.setZero();

    const double sf = std::sqrt(weights_.task), sr = std::sqrt(weights_.reachability), ss = std::sqrt(weights_.smoothness);
    double total = weights_.task * static_task_;
    ChainFrames prev;
    Eigen::MatrixXd prev_j;
    for (int t = 0; t < horizon_; ++t) {
      const Eigen::VectorXd q = config(x, t);
      const ChainFrames f = forward_frames(model_, q);
      const Eigen::MatrixXd j = jacobian(f);
      auto g = gradient->segment(static_cast<Eigen::Index>(t) * d, d);
      Eigen::MatrixXd& h = hessian->diag[static_cast<std::size_t>(t)];

      // task
      const auto& tgt = targets_[static_cast<std::size_t>(t)];
      Eigen::MatrixXd jp(3, d);
      for (std::size_t k = 0; k < tgt.local.size(); ++k) {
        const Eigen::Vector3d p = f.ee * tgt.local[k];
        const Eigen::Vector3d r = sf * (p - tgt.target[k]);
        for (int c = 0; c < d; ++c) jp.col(c) = sf * f.axes[static_cast<std::size_t>(c)].cross(p - f.origins[static_cast<std::size_t>(c)]);
        total += r.squaredNorm();
        g.noalias() += 2.0 * jp.transpose() * r;
        h.noalias() += 2.0 * jp.transpose() * jp;
      }

      // reachability
      for (int c = 0; c < d; ++c) {
        const double above = std::max(0.0, q[c] - model_.joint(c).upper);
        const double below = std::max(0.0, model_.joint(c).lower - q[c]);
        if (above > 0.0 || below > 0.0) {
          const double r = sr * (above - below);
          total += r * r;
          g[c] += 2.0 * sr * r;
          h(c, c) += 2.0 * sr * sr;
        }
      }

      // manipulability (gradient only)
      if (weights_.manipulability > 0.0) {
        double m = 0.0;
        const Eigen::VectorXd dm = manipulability_gradient(model_, q, &m);
        total -= weights_.manipulability * m;
        g -= weights_.manipulability * dm;
      }

      // smoothness between t-1 and t
      if (t > 0) {
        auto gp = gradient->segment(static_cast<Eigen::Index>(t - 1) * d, d);
        Eigen::MatrixXd& hp = hessian->diag[static_cast<std::size_t>(t - 1)];
        Eigen::MatrixXd& hl = hessian->lower[static_cast<std::size_t>(t)];

        const Eigen::Vector3d rp = ss * (f.ee.translation() - prev.ee.translation());
        const Eigen::MatrixXd a_cur = ss * j.topRows<3>();
        const Eigen::MatrixXd a_prev = -ss * prev_j.topRows<3>();

        const Eigen::Vector3d phi = so3::log(f.ee.rotation() * prev.ee.rotation().transpose());
        const Eigen::Vector3d rr = ss * phi;
        const Eigen::Matrix3d jl_inv = so3::left_jacobian_inverse(phi);
        const Eigen::MatrixXd b_cur = ss * jl_inv * j.bottomRows<3>();
        const Eigen::MatrixXd b_prev = -ss * jl_inv.transpose() * prev_j.bottomRows<3>();

        total += rp.squaredNorm() + rr.squaredNorm();
        g.noalias() += 2.0 * (a_cur.transpose() * rp + b_cur.transpose() * rr);
        gp.noalias() += 2.0 * (a_prev.transpose() * rp + b_prev.transpose() * rr);
        h.noalias() += 2.0 * (a_cur.transpose() * a_cur + b_cur.transpose() * b_cur);
        hp.noalias() += 2.0 * (a_prev.transpose() * a_prev + b_prev.transpose() * b_prev);
        hl.noalias() += 2.0 * (a_cur.transpose() * a_prev + b_cur.transpose() * b_prev);
      }
      prev = f;
      prev_j = j;
    }
    return total;
  }

 private:
  struct StepTargets {
    std::vector<Eigen::Vector3d> local;   // grasped points in the gripper frame
    std::vector<Eigen::Vector3d> target;  // flow positions at the aligned frame
  };

  void check_size(const Eigen::VectorXd& x) const {
    if (x.size() != size()) throw Error(ErrorKind::kInvalidArgument, "trajectory vector has the wrong size");
  }

  RobotModel model_;
  CostWeights weights_;
  int horizon_;
  std::vector<StepTargets> targets_;
  double static_task_ = 0.0;  // non-grasped points never move
};

}  // namespace objflow
