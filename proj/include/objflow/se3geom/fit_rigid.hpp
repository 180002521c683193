#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <sstream>

#include "objflow/error.hpp"
#include "objflow/se3geom/rigid_transform.hpp"

namespace objflow {

/// Weighted least-squares rigid registration (Kabsch/Umeyama without scale):
/// argmin over (R, t) of sum_i w_i |R src_i + t - dst_i|^2.
///
/// Needs at least three positively weighted correspondences spanning more
/// than a line. Reflections are repaired by flipping the singular vector of
/// the smallest singular value, so det(R) = +1 always.
inline RigidTransform fit_rigid(const PointSet3& src, const PointSet3& dst, const Eigen::VectorXd& weights) {
  if (src.cols() != dst.cols() || src.cols() != weights.size()) {
    throw Error(ErrorKind::kInvalidArgument, "fit_rigid: src, dst and weights must have equal length");
  }
  if ((weights.array() < 0.0).any() || !weights.allFinite()) {
    throw Error(ErrorKind::kInvalidArgument, "fit_rigid: weights must be finite and non-negative");
  }
  const Eigen::Index positive = (weights.array() > 0.0).count();
  if (positive < 3) {
    std::ostringstream os;
    os << "fit_rigid: " << positive << " positively weighted correspondences, need 3";
    throw Error(ErrorKind::kDegenerateCorrespondence, os.str());
  }
  const double wsum = weights.sum();
  const Eigen::Vector3d src_mean = src * weights / wsum;
  const Eigen::Vector3d dst_mean = dst * weights / wsum;
  const PointSet3 src_c = src.colwise() - src_mean;
  const PointSet3 dst_c = dst.colwise() - dst_mean;

  // Spread of the source set: a line (or point) leaves rotation about it unobservable.
  const Eigen::Matrix3d src_cov = src_c * weights.asDiagonal() * src_c.transpose();
  const Eigen::Vector3d spread = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(src_cov).eigenvalues();
  if (!(spread[2] > 0.0) || spread[1] <= 1e-12 * spread[2]) {
    throw Error(ErrorKind::kDegenerateGeometry, "fit_rigid: correspondences are collinear or coincident");
  }

  const Eigen::Matrix3d cov = dst_c * weights.asDiagonal() * src_c.transpose();
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  const Eigen::Matrix3d r = svd.matrixU() * d * svd.matrixV().transpose();
  return {r, dst_mean - r * src_mean};
}

inline RigidTransform fit_rigid(const PointSet3& src, const PointSet3& dst) {
  return fit_rigid(src, dst, Eigen::VectorXd::Ones(src.cols()));
}

/// Weighted sum of squared residuals of `t` on the correspondences.
inline double rigid_residual(const RigidTransform& t, const PointSet3& src, const PointSet3& dst,
                             const Eigen::VectorXd& weights) {
  return ((t.apply(src) - dst).colwise().squaredNorm().transpose().array() * weights.array()).sum();
}

}  // namespace objflow
