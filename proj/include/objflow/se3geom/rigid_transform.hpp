#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "objflow/error.hpp"

namespace objflow {

/// Points stored column-wise, one 3D point per column (meters).
using PointSet3 = Eigen::Matrix3Xd;

namespace so3 {

inline Eigen::Matrix3d skew(const Eigen::Vector3d& w) {
  Eigen::Matrix3d s;
  s << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
       -w.y(), w.x(), 0.0;
  return s;
}

inline Eigen::Matrix3d exp(const Eigen::Vector3d& w) {
  return Eigen::AngleAxisd(w.norm(), w.norm() > 0.0 ? w.normalized() : Eigen::Vector3d::UnitZ())
      .toRotationMatrix();
}

/// Rotation vector of R, angle in [0, pi].
inline Eigen::Vector3d log(const Eigen::Matrix3d& r) {
  const Eigen::AngleAxisd aa(r);
  return aa.angle() * aa.axis();
}

/// Geodesic distance between two rotations (radians).
inline double angle_between(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  const Eigen::Matrix3d r = a.transpose() * b;
  const double sin_t = 0.5 * Eigen::Vector3d(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1)).norm();
  return std::atan2(sin_t, 0.5 * (r.trace() - 1.0));
}

/// Inverse of the left Jacobian of SO(3) at rotation vector phi:
/// d log(exp(dw) R) / d dw evaluated at dw = 0, with phi = log(R).
inline Eigen::Matrix3d left_jacobian_inverse(const Eigen::Vector3d& phi) {
  const double theta = phi.norm();
  const Eigen::Matrix3d k = skew(phi);
  double coeff;
  if (theta < 1e-4) {
    // series of 1/t^2 - (1 + cos t) / (2 t sin t)
    const double t2 = theta * theta;
    coeff = 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
  } else {
    coeff = 1.0 / (theta * theta) - (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  }
  return Eigen::Matrix3d::Identity() - 0.5 * k + coeff * k * k;
}

}  // namespace so3

/// Proper rigid motion in 3D. Invariants are checked on construction.
class RigidTransform {
 public:
  RigidTransform() : rotation_(Eigen::Matrix3d::Identity()), translation_(Eigen::Vector3d::Zero()) {}

  RigidTransform(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
      : rotation_(rotation), translation_(translation) {
    check();
  }

  static RigidTransform identity() { return {}; }

  static RigidTransform from_translation(const Eigen::Vector3d& t) {
    return {Eigen::Matrix3d::Identity(), t};
  }

  static RigidTransform from_axis_angle(const Eigen::Vector3d& axis, double angle,
                                        const Eigen::Vector3d& t = Eigen::Vector3d::Zero()) {
    return {Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix(), t};
  }

  /// Quaternion given as (w, x, y, z); normalized before use.
  static RigidTransform from_quaternion(const Eigen::Vector4d& wxyz, const Eigen::Vector3d& t) {
    Eigen::Quaterniond q(wxyz[0], wxyz[1], wxyz[2], wxyz[3]);
    if (!(q.norm() > 0.0) || !std::isfinite(q.norm())) {
      throw Error(ErrorKind::kInvalidArgument, "quaternion has zero or non-finite norm");
    }
    q.normalize();
    return {q.toRotationMatrix(), t};
  }

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }

  /// (w, x, y, z) with w >= 0.
  Eigen::Vector4d quaternion_wxyz() const {
    Eigen::Quaterniond q(rotation_);
    q.normalize();
    if (q.w() < 0.0) q.coeffs() *= -1.0;
    return {q.w(), q.x(), q.y(), q.z()};
  }

  Eigen::Matrix4d matrix() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = rotation_;
    m.topRightCorner<3, 1>() = translation_;
    return m;
  }

  RigidTransform inverse() const {
    RigidTransform out;
    out.rotation_ = rotation_.transpose();
    out.translation_ = -(out.rotation_ * translation_);
    return out;
  }

  RigidTransform operator*(const RigidTransform& other) const {
    RigidTransform out;
    out.rotation_ = rotation_ * other.rotation_;
    out.translation_ = rotation_ * other.translation_ + translation_;
    return out;
  }

  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const { return rotation_ * p + translation_; }

  PointSet3 apply(const PointSet3& points) const {
    return (rotation_ * points).colwise() + translation_;
  }

  /// Re-orthonormalize accumulated products; keeps long chains inside the invariants.
  RigidTransform normalized() const {
    Eigen::Quaterniond q(rotation_);
    q.normalize();
    RigidTransform out;
    out.rotation_ = q.toRotationMatrix();
    out.translation_ = translation_;
    return out;
  }

  bool is_approx(const RigidTransform& other, double tol) const {
    return (rotation_ - other.rotation_).cwiseAbs().maxCoeff() <= tol &&
           (translation_ - other.translation_).cwiseAbs().maxCoeff() <= tol;
  }

 private:
  void check() const {
    if (!rotation_.allFinite() || !translation_.allFinite()) {
      throw Error(ErrorKind::kInvalidArgument, "rigid transform has non-finite entries");
    }
    const double ortho = (rotation_.transpose() * rotation_ - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    const double det = rotation_.determinant();
    if (ortho > 1e-9 || std::abs(det - 1.0) > 1e-9) {
      std::ostringstream os;
      os << "rotation is not proper orthonormal (|R^T R - I| = " << ortho << ", det = " << det << ")";
      throw Error(ErrorKind::kInvalidArgument, os.str());
    }
  }

  Eigen::Matrix3d rotation_;
  Eigen::Vector3d translation_;
};

inline RigidTransform compose(const RigidTransform& a, const RigidTransform& b) { return a * b; }
inline RigidTransform invert(const RigidTransform& a) { return a.inverse(); }
inline PointSet3 apply(const RigidTransform& a, const PointSet3& points) { return a.apply(points); }

}  // namespace objflow
