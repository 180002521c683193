#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <vector>

#include "objflow/se3geom/rigid_transform.hpp"

namespace objflow {

/// Uniform cubic B-spline interpolating a sequence of points at integer
/// parameters 0..N-1 (natural end conditions via phantom control points).
class InterpolatingCubicBSpline {
 public:
  explicit InterpolatingCubicBSpline(const std::vector<Eigen::Vector3d>& points) {
    const auto n = static_cast<Eigen::Index>(points.size());
    if (n < 2) throw Error(ErrorKind::kInvalidArgument, "spline needs at least two points");
    // Control points c_0..c_{n-1} with p_k = (c_{k-1} + 4 c_k + c_{k+1}) / 6 and
    // natural ends c_{-1} = 2 c_0 - c_1, c_n = 2 c_{n-1} - c_{n-2}, which reduce to c_0 = p_0, c_{n-1} = p_{n-1}.
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd rhs(n, 3);
    for (Eigen::Index k = 0; k < n; ++k) rhs.row(k) = points[static_cast<std::size_t>(k)].transpose();
    a(0, 0) = 1.0;
    a(n - 1, n - 1) = 1.0;
    for (Eigen::Index k = 1; k + 1 < n; ++k) {
      a(k, k - 1) = 1.0 / 6.0;
      a(k, k) = 4.0 / 6.0;
      a(k, k + 1) = 1.0 / 6.0;
    }
    const Eigen::MatrixXd c = a.partialPivLu().solve(rhs);
    control_.resize(static_cast<std::size_t>(n + 2));
    for (Eigen::Index k = 0; k < n; ++k) control_[static_cast<std::size_t>(k + 1)] = c.row(k).transpose();
    control_.front() = 2.0 * control_[1] - control_[2];
    control_.back() = 2.0 * control_[static_cast<std::size_t>(n)] - control_[static_cast<std::size_t>(n - 1)];
    segments_ = n - 1;
  }

  double max_parameter() const { return static_cast<double>(segments_); }

  Eigen::Vector3d operator()(double u) const {
    u = std::clamp(u, 0.0, max_parameter());
    const auto seg = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(u)), segments_ - 1);
    const double s = u - static_cast<double>(seg);
    const double s2 = s * s, s3 = s2 * s;
    const double b0 = (1.0 - 3.0 * s + 3.0 * s2 - s3) / 6.0;
    const double b1 = (4.0 - 6.0 * s2 + 3.0 * s3) / 6.0;
    const double b2 = (1.0 + 3.0 * s + 3.0 * s2 - 3.0 * s3) / 6.0;
    const double b3 = s3 / 6.0;
    const auto i = static_cast<std::size_t>(seg);
    return b0 * control_[i] + b1 * control_[i + 1] + b2 * control_[i + 2] + b3 * control_[i + 3];
  }

 private:
  std::vector<Eigen::Vector3d> control_;
  Eigen::Index segments_ = 0;
};

struct ResampleOptions {
  double min_translation = 0.01;                          // m
  double min_rotation = 20.0 * 3.14159265358979323846 / 180.0;  // rad
  int samples_per_segment = 200;
};

struct ResampleResult {
  std::vector<RigidTransform> poses;
  bool passthrough = false;  // fewer than 4 inputs, returned unchanged
};

/// Fit positions with a cubic B-spline, slerp orientations along the same
/// parameter, and walk the curve emitting a pose whenever translation or
/// rotation relative to the last emitted pose reaches its threshold.
/// First and last poses are always emitted; the final gap falls short only
/// when the whole path stays within both thresholds of the first pose.
inline ResampleResult bspline_resample(const std::vector<RigidTransform>& poses, const ResampleOptions& opts = {}) {
  if (poses.size() < 4) return {poses, true};
  std::vector<Eigen::Vector3d> positions;
  std::vector<Eigen::Quaterniond> rotations;
  for (const auto& p : poses) {
    positions.push_back(p.translation());
    Eigen::Quaterniond q(p.rotation());
    q.normalize();
    if (!rotations.empty() && rotations.back().dot(q) < 0.0) q.coeffs() *= -1.0;
    rotations.push_back(q);
  }
  const InterpolatingCubicBSpline spline(positions);
  const auto pose_at = [&](double u) {
    u = std::clamp(u, 0.0, spline.max_parameter());
    const auto seg = std::min<std::size_t>(static_cast<std::size_t>(std::floor(u)), rotations.size() - 2);
    const Eigen::Quaterniond q = rotations[seg].slerp(u - static_cast<double>(seg), rotations[seg + 1]).normalized();
    return RigidTransform(q.toRotationMatrix(), spline(u));
  };
  const auto far_enough = [&](const RigidTransform& a, const RigidTransform& b) {
    return (a.translation() - b.translation()).norm() >= opts.min_translation ||
           so3::angle_between(a.rotation(), b.rotation()) >= opts.min_rotation;
  };

  const double end = spline.max_parameter();
  const double du = 1.0 / opts.samples_per_segment;
  std::vector<RigidTransform> out{pose_at(0.0)};
  double last_false = 0.0;
  for (double u = du; u < end; u += du) {
    if (!far_enough(out.back(), pose_at(u))) {
      last_false = u;
      continue;
    }
    // Bisect between the last sample below threshold and this one; keep the side that satisfies it.
    double lo = last_false, hi = u;
    for (int k = 0; k < 40; ++k) {
      const double mid = 0.5 * (lo + hi);
      (far_enough(out.back(), pose_at(mid)) ? hi : lo) = mid;
    }
    out.push_back(pose_at(hi));
    last_false = hi;
    u = hi;
  }
  const RigidTransform last = pose_at(end);
  // Absorb a short final gap by dropping interior samples until the last pair is far enough.
  while (out.size() >= 2 && !far_enough(out.back(), last)) out.pop_back();
  out.push_back(last);
  return {out, false};
}

}  // namespace objflow
