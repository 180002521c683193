#pragma once

#include <vector>

#include "objflow/depthflow/types.hpp"
#include "objflow/se3geom/rigid_transform.hpp"

namespace objflow {

/// Rigid-grasp dynamics: grasped points ride with the end-effector,
/// p_t = T_t * grasp^-1 * p_0, all other points stay where they are.
/// `grasp` is the end-effector pose at which `points0` were observed.
inline std::vector<PointSet3> rigid_grasp_rollout(const RigidTransform& grasp, const std::vector<RigidTransform>& ee_poses,
                                                  const PointSet3& points0, const std::vector<Eigen::Index>& grasped) {
  for (Eigen::Index i : grasped) {
    if (i < 0 || i >= points0.cols()) throw Error(ErrorKind::kInvalidArgument, "grasped index outside the point set");
  }
  const RigidTransform to_gripper = grasp.inverse();
  std::vector<PointSet3> out;
  out.reserve(ee_poses.size());
  for (const RigidTransform& ee : ee_poses) {
    const RigidTransform motion = ee * to_gripper;
    PointSet3 p = points0;
    for (Eigen::Index i : grasped) p.col(i) = motion * Eigen::Vector3d(points0.col(i));
    out.push_back(std::move(p));
  }
  return out;
}

/// Flow of a rollout with every point visible.
inline ObjectFlow3D rollout_flow(const std::vector<PointSet3>& frames) {
  if (frames.empty()) return {};
  return {frames, VisibilityMask::Constant(static_cast<Eigen::Index>(frames.size()), frames.front().cols(), true)};
}

}  // namespace objflow
