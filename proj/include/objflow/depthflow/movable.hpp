#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "objflow/depthflow/types.hpp"

namespace objflow {

struct MovableResult {
  std::vector<Eigen::Index> movable;       // ascending track indices
  std::vector<Eigen::Index> unclassified;  // never visible on two consecutive frames
  Eigen::VectorXd mean_displacement;       // px per step, NaN when unclassified
  VisibilityMask visible;                  // visibility after the part-mask constraint
};

/// Tracks whose mean per-step 2D displacement (over consecutive frame pairs
/// visible in both) reaches `threshold_px` belong to the moving part. With part
/// masks, a visible point outside the mask of its frame becomes invalid there.
inline MovableResult filter_movable(const Tracks2D& tracks, const std::optional<std::vector<PixelMask>>& part_masks,
                                    double threshold_px = 1.0) {
  tracks.check_shape();
  const Eigen::Index frames = tracks.frames();
  const Eigen::Index n = tracks.points();
  if (frames < 2) throw Error(ErrorKind::kInvalidArgument, "movable filtering needs at least two frames");

  MovableResult out;
  out.mean_displacement = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index i = 0; i < n; ++i) {
    double total = 0.0;
    int pairs = 0;
    for (Eigen::Index t = 0; t + 1 < frames; ++t) {
      if (tracks.visible(t, i) && tracks.visible(t + 1, i)) {
        total += (tracks.uv[t + 1].col(i) - tracks.uv[t].col(i)).norm();
        ++pairs;
      }
    }
    if (pairs == 0) {
      out.unclassified.push_back(i);
      continue;
    }
    out.mean_displacement[i] = total / pairs;
    if (out.mean_displacement[i] >= threshold_px) out.movable.push_back(i);
  }

  out.visible = tracks.visible;
  if (part_masks) {
    if (static_cast<Eigen::Index>(part_masks->size()) != frames) {
      throw Error(ErrorKind::kInvalidArgument, "part mask count differs from frame count");
    }
    for (Eigen::Index t = 0; t < frames; ++t) {
      const PixelMask& mask = (*part_masks)[static_cast<std::size_t>(t)];
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!out.visible(t, i)) continue;
        const Eigen::Vector2d px = tracks.uv[t].col(i);
        const bool inside = px.x() >= -0.5 && px.y() >= -0.5 && px.x() < mask.cols() - 0.5 &&
                            px.y() < mask.rows() - 0.5 && sample_nearest(mask, px);
        if (!inside) out.visible(t, i) = false;
      }
    }
  }
  return out;
}

}  // namespace objflow
