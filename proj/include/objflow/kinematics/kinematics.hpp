#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <limits>
#include <vector>

#include "objflow/kinematics/robot_model.hpp"

namespace objflow {

/// World-frame joint axes and origins plus the end-effector pose at one configuration.
struct ChainFrames {
  std::vector<Eigen::Vector3d> axes;
  std::vector<Eigen::Vector3d> origins;
  RigidTransform ee;
};

inline ChainFrames forward_frames(const RobotModel& model, const Eigen::VectorXd& q) {
  if (q.size() != model.dof()) throw Error(ErrorKind::kInvalidArgument, "configuration size differs from robot DOF");
  if (!q.allFinite()) throw Error(ErrorKind::kInvalidArgument, "configuration is not finite");
  ChainFrames out;
  out.axes.reserve(static_cast<std::size_t>(model.dof()));
  out.origins.reserve(static_cast<std::size_t>(model.dof()));
  Eigen::Matrix3d r = model.base().rotation();
  Eigen::Vector3d p = model.base().translation();
  for (int j = 0; j < model.dof(); ++j) {
    const RevoluteJoint& jt = model.joint(j);
    p = r * jt.origin.translation() + p;
    r = r * jt.origin.rotation();
    out.axes.push_back(r * jt.axis);
    out.origins.push_back(p);
    r = r * Eigen::AngleAxisd(q[j], jt.axis).toRotationMatrix();
  }
  const Eigen::Vector3d pe = r * model.ee_offset().translation() + p;
  Eigen::Quaterniond qe(r * model.ee_offset().rotation());
  qe.normalize();
  out.ee = RigidTransform(qe.toRotationMatrix(), pe);
  return out;
}

/// End-effector pose in the robot frame.
inline RigidTransform fk(const RobotModel& model, const Eigen::VectorXd& q) { return forward_frames(model, q).ee; }

/// Geometric Jacobian from frames: rows 0-2 linear (m/rad), rows 3-5 angular.
inline Eigen::MatrixXd jacobian(const ChainFrames& f) {
  const auto dof = static_cast<Eigen::Index>(f.axes.size());
  Eigen::MatrixXd j(6, dof);
  const Eigen::Vector3d pe = f.ee.translation();
  for (Eigen::Index k = 0; k < dof; ++k) {
    j.block<3, 1>(0, k) = f.axes[k].cross(pe - f.origins[k]);
    j.block<3, 1>(3, k) = f.axes[k];
  }
  return j;
}

inline Eigen::MatrixXd jacobian(const RobotModel& model, const Eigen::VectorXd& q) {
  return jacobian(forward_frames(model, q));
}

/// dJ/dq_k for a revolute chain (geometric Jacobian derivative):
///   angular column i: z_k x z_i when k < i, else 0
///   linear column i:  z_k x Jv_i when k < i, else z_i x Jv_k
inline Eigen::MatrixXd jacobian_derivative(const ChainFrames& f, const Eigen::MatrixXd& j, Eigen::Index k) {
  const Eigen::Index dof = j.cols();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(6, dof);
  const Eigen::Vector3d zk = f.axes[k];
  for (Eigen::Index i = 0; i < dof; ++i) {
    const Eigen::Vector3d jv_i = j.block<3, 1>(0, i);
    if (k < i) {
      d.block<3, 1>(0, i) = zk.cross(jv_i);
      d.block<3, 1>(3, i) = zk.cross(f.axes[i]);
    } else {
      d.block<3, 1>(0, i) = f.axes[i].cross(Eigen::Vector3d(j.block<3, 1>(0, k)));
    }
  }
  return d;
}

/// Product of the min(rows, cols) singular values of J: sqrt(det(J J^T)) for a
/// wide or square J, sqrt(det(J^T J)) for a tall one.
inline double manipulability(const Eigen::MatrixXd& j) {
  if (j.size() == 0) return 0.0;
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(j);
  return svd.singularValues().prod();
}

/// Yoshikawa measure of the full 6 x DOF geometric Jacobian.
inline double manipulability(const RobotModel& model, const Eigen::VectorXd& q) {
  return manipulability(jacobian(model, q));
}

/// Analytic gradient of manipulability(model, q) with respect to q.
inline Eigen::VectorXd manipulability_gradient(const RobotModel& model, const Eigen::VectorXd& q, double* value = nullptr) {
  const ChainFrames f = forward_frames(model, q);
  const Eigen::MatrixXd j = jacobian(f);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(j, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const Eigen::Index r = s.size();
  // d(prod s) = sum_i (u_i^T dJ v_i) prod_{l != i} s_l
  Eigen::VectorXd others(r);
  for (Eigen::Index i = 0; i < r; ++i) {
    double prod = 1.0;
    for (Eigen::Index l = 0; l < r; ++l)
      if (l != i) prod *= s[l];
    others[i] = prod;
  }
  if (value != nullptr) *value = s.prod();
  Eigen::VectorXd g(model.dof());
  for (Eigen::Index k = 0; k < model.dof(); ++k) {
    const Eigen::MatrixXd dj = jacobian_derivative(f, j, k);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < r; ++i) acc += svd.matrixU().col(i).dot(dj * svd.matrixV().col(i)) * others[i];
    g[k] = acc;
  }
  return g;
}

/// Quadratic hinge outside the joint limits, zero inside.
inline double reachability_cost(const RobotModel& model, const Eigen::VectorXd& q) {
  double c = 0.0;
  for (int j = 0; j < model.dof(); ++j) {
    const double above = std::max(0.0, q[j] - model.joint(j).upper);
    const double below = std::max(0.0, model.joint(j).lower - q[j]);
    c += above * above + below * below;
  }
  return c;
}

/// Pose error (target relative to current) as [translation; world rotation vector].
inline Eigen::Matrix<double, 6, 1> pose_error(const RigidTransform& target, const RigidTransform& current) {
  Eigen::Matrix<double, 6, 1> e;
  e.head<3>() = target.translation() - current.translation();
  e.tail<3>() = so3::log(target.rotation() * current.rotation().transpose());
  return e;
}

struct IkParams {
  double damping = 0.05;
  int max_iterations = 200;
  double translation_tol = 1e-4;  // m
  double rotation_tol = 1e-3;     // rad
};

struct IkResult {
  Eigen::VectorXd q;
  bool converged = false;
  int iterations = 0;
  double translation_error = 0.0;
  double rotation_error = 0.0;
};

/// Damped least squares IK with joint-limit clamping of every iterate.
/// Never throws on failure; returns the best iterate with converged = false.
inline IkResult ik_dls(const RobotModel& model, const RigidTransform& target, const Eigen::VectorXd& q0,
                       const IkParams& params = {}) {
  Eigen::VectorXd q = model.clamp(q0);
  IkResult best{q, false, 0, std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  const auto score = [](double et, double er) { return et + 0.1 * er; };
  const double lambda2 = params.damping * params.damping;
  for (int it = 0; it <= params.max_iterations; ++it) {
    const ChainFrames f = forward_frames(model, q);
    const Eigen::Matrix<double, 6, 1> e = pose_error(target, f.ee);
    const double et = e.head<3>().norm(), er = e.tail<3>().norm();
    if (score(et, er) < score(best.translation_error, best.rotation_error)) {
      best.q = q;
      best.translation_error = et;
      best.rotation_error = er;
      best.iterations = it;
    }
    if (et < params.translation_tol && er < params.rotation_tol) {
      best.converged = true;
      return best;
    }
    if (it == params.max_iterations) break;
    const Eigen::MatrixXd j = jacobian(f);
    const Eigen::Matrix<double, 6, 6> a = j * j.transpose() + lambda2 * Eigen::Matrix<double, 6, 6>::Identity();
    Eigen::VectorXd dq = j.transpose() * a.ldlt().solve(e);
    const double step = dq.cwiseAbs().maxCoeff();
    if (step > 0.5) dq *= 0.5 / step;
    q = model.clamp(q + dq);
  }
  best.converged = false;
  return best;
}

}  // namespace objflow
