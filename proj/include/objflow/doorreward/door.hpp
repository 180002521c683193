#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "objflow/depthflow/types.hpp"
#include "objflow/error.hpp"
#include "objflow/se3geom/rigid_transform.hpp"

namespace objflow::door {

inline constexpr double kPi = 3.14159265358979323846;

/// Door body frame: hinge axis along +z through the origin, closed panel in
/// the x-z plane spanning x in [0, width], opening turns +x toward +y. The
/// handle is a lever on the +y face that turns about the face normal.
struct DoorGeometry {
  double width = 0.22;
  double height = 0.30;
  double handle_offset = 0.18;    // pivot distance from the hinge along the panel
  double handle_height = 0.15;
  double handle_standoff = 0.03;  // pivot distance from the face
  double lever_length = 0.06;     // lever points back toward the hinge when closed

  void check() const {
    if (!(width > 0.0 && height > 0.0 && lever_length > 0.0)) throw Error(ErrorKind::kInvalidArgument, "door dimensions must be positive");
  }
};

struct DoorLimits {
  double hinge_min = 0.0, hinge_max = 0.5 * kPi;
  double handle_min = 0.0, handle_max = 0.5 * kPi;
  double max_hinge_step = 0.1;   // rad per step
  double max_handle_step = 0.2;  // rad per step
  double max_ee_step = 0.05;     // m per step
};

struct DoorState {
  double hinge_angle = 0.0;
  double handle_angle = 0.0;
  RigidTransform frame;  // door body frame in the world
  DoorGeometry geometry;
  Eigen::Vector3d ee = Eigen::Vector3d::Zero();  // world frame

  RigidTransform hinge_rotation() const { return RigidTransform::from_axis_angle(Eigen::Vector3d::UnitZ(), hinge_angle); }

  /// Lever midpoint, door body frame.
  Eigen::Vector3d handle_in_door() const {
    const DoorGeometry& g = geometry;
    const Eigen::Vector3d pivot(g.handle_offset, g.handle_standoff, g.handle_height);
    const Eigen::Vector3d lever(-std::cos(handle_angle), 0.0, std::sin(handle_angle));
    return hinge_rotation() * Eigen::Vector3d(pivot + 0.5 * g.lever_length * lever);
  }

  Eigen::Vector3d handle_position() const { return frame * handle_in_door(); }
  Eigen::Vector3d ee_in_door() const { return frame.inverse() * ee; }
  double gripper_handle_distance() const { return (ee - handle_position()).norm(); }

  /// Template particles (door body frame, closed door) carried by the hinge.
  PointSet3 particles(const PointSet3& template_points) const { return hinge_rotation().apply(template_points); }
};

struct DoorAction {
  double hinge = 0.0;
  double handle = 0.0;
  Eigen::Vector3d ee = Eigen::Vector3d::Zero();
};

/// Integrate one action; angles are clamped to their ranges.
inline DoorState door_step(const DoorState& s, const DoorAction& a, const DoorLimits& lim = {}) {
  constexpr double kSlack = 1e-12;
  if (!std::isfinite(a.hinge) || !std::isfinite(a.handle) || !a.ee.allFinite()) {
    throw Error(ErrorKind::kInvalidArgument, "door action has non-finite entries");
  }
  if (std::abs(a.hinge) > lim.max_hinge_step + kSlack || std::abs(a.handle) > lim.max_handle_step + kSlack ||
      a.ee.norm() > lim.max_ee_step + kSlack) {
    throw Error(ErrorKind::kInvalidArgument, "door action exceeds the per-step limits");
  }
  DoorState out = s;
  out.hinge_angle = std::clamp(s.hinge_angle + a.hinge, lim.hinge_min, lim.hinge_max);
  out.handle_angle = std::clamp(s.handle_angle + a.handle, lim.handle_min, lim.handle_max);
  out.ee = s.ee + a.ee;
  return out;
}

/// nx x nz grid on the closed panel face (door body frame).
inline PointSet3 panel_particles(const DoorGeometry& g, int nx = 5, int nz = 6) {
  g.check();
  if (nx < 1 || nz < 1 || nx * nz < 3) throw Error(ErrorKind::kInvalidArgument, "door template needs at least 3 particles");
  PointSet3 p(3, nx * nz);
  for (int k = 0; k < nz; ++k) {
    for (int i = 0; i < nx; ++i) p.col(k * nx + i) = Eigen::Vector3d((i + 0.5) * g.width / nx, 0.0, (k + 0.5) * g.height / nz);
  }
  return p;
}

/// Reference flow of the template as the hinge goes linearly from 0 to
/// `final_angle` over `frames` frames.
inline ObjectFlow3D hinge_flow(const PointSet3& template_points, double final_angle, int frames) {
  if (frames < 2) throw Error(ErrorKind::kInvalidArgument, "hinge flow needs 2+ frames");
  std::vector<PointSet3> pos;
  for (int t = 0; t < frames; ++t) {
    pos.push_back(RigidTransform::from_axis_angle(Eigen::Vector3d::UnitZ(), final_angle * t / (frames - 1)).apply(template_points));
  }
  return {std::move(pos), VisibilityMask::Constant(frames, template_points.cols(), true)};
}

}  // namespace objflow::door
