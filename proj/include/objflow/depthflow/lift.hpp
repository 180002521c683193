#pragma once

#include <limits>
#include <vector>

#include "objflow/depthflow/types.hpp"

namespace objflow {

struct LiftDiagnostics {
  int demoted_invalid_depth = 0;  // visible entries whose calibrated depth was <= 0 or not finite
  int demoted_out_of_bounds = 0;  // visible entries whose pixel fell outside the image
  std::vector<Eigen::Index> empty_frames;
};

struct LiftResult {
  ObjectFlow3D flow;
  LiftDiagnostics diagnostics;
};

/// Lift every visible track point with its calibrated depth into the robot frame.
/// Entries that cannot be lifted are demoted to invisible and counted.
inline LiftResult lift_flow(const FlowBundle& bundle, const ScaleShift& calib) {
  bundle.tracks.check_shape();
  const Eigen::Index frames = bundle.frames();
  const Eigen::Index n = bundle.points();
  if (static_cast<Eigen::Index>(bundle.depths.size()) != frames) {
    throw Error(ErrorKind::kInvalidArgument, "depth sequence length differs from track length");
  }
  LiftDiagnostics diag;
  std::vector<PointSet3> positions(static_cast<std::size_t>(frames),
                                   PointSet3::Constant(3, n, std::numeric_limits<double>::quiet_NaN()));
  VisibilityMask visible = bundle.tracks.visible;
  for (Eigen::Index t = 0; t < frames; ++t) {
    const auto& uv = bundle.tracks.uv[t];
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!visible(t, i)) continue;
      const Eigen::Vector2d px = uv.col(i);
      if (!bundle.cam.in_bounds(px)) {
        visible(t, i) = false;
        ++diag.demoted_out_of_bounds;
        continue;
      }
      const double z = calib.scale * static_cast<double>(sample_nearest(bundle.depths[t], px)) + calib.shift;
      if (!std::isfinite(z) || z <= 0.0) {
        visible(t, i) = false;
        ++diag.demoted_invalid_depth;
        continue;
      }
      positions[t].col(i) = bundle.cam.backproject(px, z);
    }
    if (!visible.row(t).any()) diag.empty_frames.push_back(t);
  }
  return {ObjectFlow3D(std::move(positions), std::move(visible)), std::move(diag)};
}

}  // namespace objflow
