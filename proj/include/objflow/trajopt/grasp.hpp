#pragma once

#include <limits>
#include <string>
#include <vector>

#include "objflow/depthflow/types.hpp"
#include "objflow/se3geom/rigid_transform.hpp"

namespace objflow {

struct GraspCandidate {
  RigidTransform pose;  // gripper frame in robot coordinates
  double score = 0.0;   // [0, 1]
};

/// Thumb positions detected in the video, one per frame.
struct ThumbTrajectory {
  Eigen::Matrix3Xd positions;
  Eigen::Array<bool, Eigen::Dynamic, 1> detected;

  Eigen::Index frames() const { return positions.cols(); }
};

enum class GraspReason { kThumbProximity, kMovableCentroid };

inline const char* to_string(GraspReason r) {
  return r == GraspReason::kThumbProximity ? "thumb-proximity" : "movable-centroid";
}

struct GraspSelection {
  std::size_t index = 0;
  GraspCandidate grasp;
  GraspReason reason = GraspReason::kMovableCentroid;
  Eigen::Index frame = -1;  // thumb frame that triggered the choice
};

inline constexpr double kThumbGraspRadius = 0.02;  // m

/// Earliest frame with a detected thumb within 2 cm of a candidate picks the
/// closest such candidate; otherwise the candidate nearest the movable-point centroid.
inline GraspSelection select_grasp(const std::vector<GraspCandidate>& candidates, const ThumbTrajectory& thumb,
                                   const PointSet3& movable_points, double radius = kThumbGraspRadius) {
  if (candidates.empty()) throw Error(ErrorKind::kNoGrasp, "no grasp candidates");
  for (Eigen::Index t = 0; t < thumb.frames(); ++t) {
    if (!thumb.detected[t]) continue;
    std::size_t best = candidates.size();
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const double d = (candidates[c].pose.translation() - thumb.positions.col(t)).norm();
      if (d <= radius && d < best_d) {
        best_d = d;
        best = c;
      }
    }
    if (best < candidates.size()) return {best, candidates[best], GraspReason::kThumbProximity, t};
  }
  if (movable_points.cols() == 0) {
    throw Error(ErrorKind::kNoGrasp, "no thumb match and no movable points for the fallback");
  }
  const Eigen::Vector3d centroid = movable_points.rowwise().mean();
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const double d = (candidates[c].pose.translation() - centroid).norm();
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return {best, candidates[best], GraspReason::kMovableCentroid, -1};
}

inline constexpr double kGraspedRadius = 0.05;  // m

/// Indices among `candidates` whose frame-0 position lies within `radius` of the grasp.
inline std::vector<Eigen::Index> grasped_subset(const ObjectFlow3D& flow, const std::vector<Eigen::Index>& candidates,
                                                const RigidTransform& grasp, double radius = kGraspedRadius) {
  std::vector<Eigen::Index> out;
  for (Eigen::Index i : candidates) {
    if (flow.visible(0, i) && (flow.positions(0).col(i) - grasp.translation()).norm() <= radius) out.push_back(i);
  }
  return out;
}

}  // namespace objflow
