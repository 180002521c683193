#pragma once

#include <string_view>
#include <vector>

#include "objflow/depthflow/types.hpp"
#include "objflow/se3geom/fit_rigid.hpp"

namespace objflow {

/// Both baselines reduce to per-frame rigid fits against the first frame here;
/// they differ only in the upstream tracker that produced the flow.
enum class BaselineMode { kAvdc, kRigvid };

inline BaselineMode baseline_mode_from_string(std::string_view s) {
  if (s == "avdc") return BaselineMode::kAvdc;
  if (s == "rigvid") return BaselineMode::kRigvid;
  throw Error(ErrorKind::kInvalidArgument, "unknown baseline mode '" + std::string(s) + "'");
}

struct RigidFrame {
  RigidTransform transform;  // frame 0 -> frame t
  bool reliable = true;
  int correspondences = 0;
};

/// Rigid transform of every frame relative to frame 0, fitted over the points
/// visible in both. Frames with fewer than three usable correspondences (or a
/// degenerate layout) are flagged unreliable and carry the previous transform.
inline std::vector<RigidFrame> baseline_rigid_trajectory(const ObjectFlow3D& flow, BaselineMode /*mode*/ = BaselineMode::kAvdc) {
  if (flow.frames() == 0) throw Error(ErrorKind::kInvalidArgument, "empty flow");
  const Eigen::Index n = flow.points();
  if (flow.visibility().row(0).count() < 3) {
    throw Error(ErrorKind::kDegenerateCorrespondence, "first frame has fewer than 3 visible points");
  }
  const PointSet3 first = flow.positions(0).unaryExpr([](double v) { return std::isfinite(v) ? v : 0.0; });
  std::vector<RigidFrame> out;
  out.reserve(static_cast<std::size_t>(flow.frames()));
  RigidTransform previous;
  for (Eigen::Index t = 0; t < flow.frames(); ++t) {
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) w[i] = (flow.visible(0, i) && flow.visible(t, i)) ? 1.0 : 0.0;
    RigidFrame frame{previous, false, static_cast<int>(w.sum())};
    if (frame.correspondences >= 3) {
      const PointSet3 current = flow.positions(t).unaryExpr([](double v) { return std::isfinite(v) ? v : 0.0; });
      try {
        frame.transform = fit_rigid(first, current, w);
        frame.reliable = true;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kDegenerateGeometry && e.kind() != ErrorKind::kDegenerateCorrespondence) throw;
      }
    }
    previous = frame.transform;
    out.push_back(frame);
  }
  return out;
}

/// Per-point residual |T_t p_0 - p_t| of a rigid trajectory on the flow, NaN where not jointly visible.
inline Eigen::MatrixXd baseline_residuals(const ObjectFlow3D& flow, const std::vector<RigidFrame>& traj) {
  Eigen::MatrixXd res = Eigen::MatrixXd::Constant(flow.frames(), flow.points(), std::numeric_limits<double>::quiet_NaN());
  for (Eigen::Index t = 0; t < flow.frames(); ++t) {
    for (Eigen::Index i = 0; i < flow.points(); ++i) {
      if (flow.visible(0, i) && flow.visible(t, i)) {
        res(t, i) = (traj[static_cast<std::size_t>(t)].transform * Eigen::Vector3d(flow.positions(0).col(i)) -
                     flow.positions(t).col(i)).norm();
      }
    }
  }
  return res;
}

}  // namespace objflow
