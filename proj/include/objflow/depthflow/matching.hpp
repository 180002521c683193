#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include "objflow/depthflow/types.hpp"

namespace objflow {

/// Mean distance over jointly visible points between `current` and frame t,
/// or NaN when no point is jointly visible.
inline double mean_joint_distance(const PointSet3& current, const Eigen::Array<bool, Eigen::Dynamic, 1>& current_visible,
                                  const ObjectFlow3D& flow, Eigen::Index t) {
  double total = 0.0;
  int count = 0;
  const PointSet3& ref = flow.positions(t);
  for (Eigen::Index i = 0; i < flow.points(); ++i) {
    if (current_visible[i] && flow.visible(t, i)) {
      total += (current.col(i) - ref.col(i)).norm();
      ++count;
    }
  }
  return count > 0 ? total / count : std::numeric_limits<double>::quiet_NaN();
}

/// Index of the flow frame closest to `current` (mean Euclidean distance over
/// jointly visible points). Ties go to the earliest frame.
inline Eigen::Index nearest_timestep(const PointSet3& current, const Eigen::Array<bool, Eigen::Dynamic, 1>& current_visible,
                                     const ObjectFlow3D& flow) {
  if (current.cols() != flow.points() || current_visible.size() != flow.points()) {
    throw Error(ErrorKind::kInvalidArgument, "current point set size differs from flow point count");
  }
  Eigen::Index best = -1;
  double best_dist = std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 0; t < flow.frames(); ++t) {
    const double d = mean_joint_distance(current, current_visible, flow, t);
    if (std::isnan(d)) continue;
    if (d < best_dist) {
      best_dist = d;
      best = t;
    }
  }
  if (best < 0) throw Error(ErrorKind::kMatchingFailure, "no jointly visible point at any flow timestep");
  return best;
}

inline Eigen::Index nearest_timestep(const PointSet3& current, const ObjectFlow3D& flow) {
  return nearest_timestep(current, Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(current.cols(), true), flow);
}

/// Frame min(t_star + lookahead, last) as the next planning target.
inline constexpr int kDefaultLookahead = 20;

inline Eigen::Index subgoal_index(Eigen::Index t_star, Eigen::Index last, int lookahead = kDefaultLookahead) {
  return std::min<Eigen::Index>(t_star + lookahead, last);
}

inline FlowSlice select_subgoal(Eigen::Index t_star, const ObjectFlow3D& flow, int lookahead = kDefaultLookahead) {
  if (t_star < 0 || t_star >= flow.frames()) throw Error(ErrorKind::kInvalidArgument, "t_star outside the flow");
  const Eigen::Index k = subgoal_index(t_star, flow.last(), lookahead);
  return {flow.positions(k), flow.visibility().row(k).transpose()};
}

/// Keep only `indices` (in order), optionally replacing visibility.
inline ObjectFlow3D subset_points(const ObjectFlow3D& flow, const std::vector<Eigen::Index>& indices,
                                  const VisibilityMask* visibility = nullptr) {
  const VisibilityMask& vis = visibility != nullptr ? *visibility : flow.visibility();
  std::vector<PointSet3> positions;
  VisibilityMask out_vis(flow.frames(), static_cast<Eigen::Index>(indices.size()));
  for (Eigen::Index t = 0; t < flow.frames(); ++t) {
    PointSet3 p(3, static_cast<Eigen::Index>(indices.size()));
    for (std::size_t k = 0; k < indices.size(); ++k) {
      const Eigen::Index i = indices[k];
      p.col(static_cast<Eigen::Index>(k)) = flow.positions(t).col(i);
      out_vis(t, static_cast<Eigen::Index>(k)) = vis(t, i) && flow.visible(t, i);
    }
    positions.push_back(std::move(p));
  }
  return {std::move(positions), std::move(out_vis)};
}

}  // namespace objflow
