#pragma once

// Synthetic fixtures: rendered track/depth bundles and rigid-grasp flows with
// known ground truth. Used by the tests, the acceptance runner and the demo
// data generator.

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

#include "objflow/depthflow/types.hpp"
#include "objflow/kinematics/kinematics.hpp"
#include "objflow/se3geom/camera.hpp"
#include "objflow/trajopt/rollout.hpp"

namespace objflow::synth {

/// Camera at `eye` looking straight down; image x along +x, image y along -y.
inline CameraModel top_down_camera(const Eigen::Vector3d& eye, double focal = 500.0, int width = 640, int height = 480) {
  const RigidTransform ext(Eigen::Vector3d(1.0, -1.0, -1.0).asDiagonal(), eye);
  return {focal, focal, 0.5 * (width - 1), 0.5 * (height - 1), width, height, ext};
}

/// Camera at `eye` looking along +y with image y pointing down (-z).
inline CameraModel facing_camera(const Eigen::Vector3d& eye, double focal = 500.0, int width = 640, int height = 480) {
  Eigen::Matrix3d r;
  r.col(0) = Eigen::Vector3d::UnitX();
  r.col(1) = -Eigen::Vector3d::UnitZ();
  r.col(2) = Eigen::Vector3d::UnitY();
  return {focal, focal, 0.5 * (width - 1), 0.5 * (height - 1), width, height, RigidTransform(r, eye)};
}

struct RenderOptions {
  ScaleShift truth{0.8, 0.1};  // metric = scale * predicted + shift
  double background = 1.2;     // m, background depth at the image center
  double tilt_u = 0.15;        // relative depth change across the image width
  double tilt_v = 0.05;        // relative depth change across the image height
  int splat_radius = 1;        // each point covers a (2r+1)^2 pixel patch
  bool part_masks = false;     // emit per-frame masks of the splatted points
  bool occlusion = false;      // hide points whose pixel holds a nearer surface
};

/// Render per-frame depth maps, tracks and masks of robot-frame points.
/// Depth maps hold a tilted background plane plus a z-buffered patch per
/// visible point; predicted depths are stored as (Z - shift) / scale. The
/// reference depth is the metric first frame. Points that project outside
/// the image or behind the camera become invisible, as do points behind a
/// nearer surface when `occlusion` is set.
inline FlowBundle render_bundle(const CameraModel& cam, const std::vector<PointSet3>& points, VisibilityMask visible,
                                const RenderOptions& opts = {}) {
  const auto frames = static_cast<Eigen::Index>(points.size());
  const Eigen::Index n = frames > 0 ? points.front().cols() : 0;
  if (visible.rows() != frames || visible.cols() != n) throw Error(ErrorKind::kInvalidArgument, "visibility shape mismatch");
  const int w = cam.width(), h = cam.height();

  Eigen::ArrayXXd plane(h, w);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      plane(v, u) = opts.background * (1.0 + opts.tilt_u * (u / double(w) - 0.5) + opts.tilt_v * (v / double(h) - 0.5));
    }
  }

  FlowBundle b{{}, {}, {}, PixelMask::Constant(h, w, false), std::nullopt, cam};
  if (opts.part_masks) b.part_masks.emplace();
  for (Eigen::Index t = 0; t < frames; ++t) {
    Eigen::ArrayXXd z = plane;
    PixelMask footprint = PixelMask::Constant(h, w, false);
    Eigen::Matrix2Xd uv = Eigen::Matrix2Xd::Zero(2, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double depth = 0.0;
      const Eigen::Vector2d px = cam.project(points[t].col(i), &depth);
      if (!(depth > 0.0) || !cam.in_bounds(px)) {
        visible(t, i) = false;
        continue;
      }
      uv.col(i) = px;
      if (!visible(t, i)) continue;
      const int cu = pixel_index(px.x(), w), cv = pixel_index(px.y(), h);
      for (int dv = -opts.splat_radius; dv <= opts.splat_radius; ++dv) {
        for (int du = -opts.splat_radius; du <= opts.splat_radius; ++du) {
          const int u = cu + du, v = cv + dv;
          if (u < 0 || v < 0 || u >= w || v >= h) continue;
          if (!footprint(v, u) || depth < z(v, u)) z(v, u) = depth;
          footprint(v, u) = true;
        }
      }
    }
    if (opts.occlusion) {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!visible(t, i)) continue;
        double depth = 0.0;
        const Eigen::Vector2d px = cam.project(points[t].col(i), &depth);
        if (z(pixel_index(px.y(), h), pixel_index(px.x(), w)) < depth - 1e-9) visible(t, i) = false;
      }
    }
    b.tracks.uv.push_back(uv);
    b.depths.push_back(((z - opts.truth.shift) / opts.truth.scale).cast<float>());
    if (t == 0) {
      b.ref_depth = z.cast<float>();
      b.object_mask = footprint;
    }
    if (opts.part_masks) b.part_masks->push_back(footprint);
  }
  b.tracks.visible = std::move(visible);
  return b;
}

inline FlowBundle render_bundle(const CameraModel& cam, const std::vector<PointSet3>& points, const RenderOptions& opts = {}) {
  const auto frames = static_cast<Eigen::Index>(points.size());
  return render_bundle(cam, points, VisibilityMask::Constant(frames, frames > 0 ? points.front().cols() : 0, true), opts);
}

/// Frames obtained by applying each transform to `points0`.
inline std::vector<PointSet3> rigid_motion(const PointSet3& points0, const std::vector<RigidTransform>& motion) {
  std::vector<PointSet3> out;
  for (const auto& m : motion) out.push_back(m.apply(points0));
  return out;
}

/// Flow produced by rigid-grasp dynamics along a smooth end-effector path,
/// with the exact generating trajectory for comparison.
struct GraspFixture {
  RobotModel model;
  Eigen::MatrixXd q;               // frames x dof, generator joint trajectory
  std::vector<RigidTransform> ee;  // fk of each generator row
  RigidTransform grasp;            // ee pose at frame 0
  PointSet3 points0;
  std::vector<Eigen::Index> grasped;
  ObjectFlow3D flow;
};

struct GraspFixtureOptions {
  int frames = 30;
  int grasped = 50;
  int fixed = 10;
  double object_radius = 0.15;  // grasped points around the grasp (m)
  double travel = 0.2;          // ee translation from first to last frame (m)
  double turn = 0.1;            // max ee rotation about the vertical (rad)
};

/// The ee starts at fk(q_start), translates by `travel` in a seeded random
/// direction (mostly horizontal) while turning about the vertical, with
/// smoothstep timing so it starts and ends at rest. Joint configurations come
/// from tightly converged IK along the path; the flow uses their exact fk.
inline GraspFixture make_grasp_fixture(const RobotModel& model, const Eigen::VectorXd& q_start, std::uint64_t seed,
                                       const GraspFixtureOptions& opts = {}) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  GraspFixture fx;
  fx.model = model;
  fx.grasp = fk(model, q_start);
  const double heading = 3.14159265358979323846 * unit(rng);
  const Eigen::Vector3d dir = Eigen::Vector3d(std::cos(heading), std::sin(heading), 0.25 * unit(rng)).normalized();
  const double turn = opts.turn * unit(rng);

  IkParams ik;
  ik.translation_tol = 1e-12;
  ik.rotation_tol = 1e-12;
  ik.max_iterations = 500;
  fx.q.resize(opts.frames, model.dof());
  Eigen::VectorXd q = q_start;
  for (int t = 0; t < opts.frames; ++t) {
    double a = opts.frames > 1 ? double(t) / (opts.frames - 1) : 0.0;
    a = a * a * (3.0 - 2.0 * a);
    const RigidTransform target(Eigen::AngleAxisd(a * turn, Eigen::Vector3d::UnitZ()) * fx.grasp.rotation(),
                                fx.grasp.translation() + a * opts.travel * dir);
    if (t > 0) {
      const IkResult r = ik_dls(model, target, q, ik);
      if (r.translation_error > 1e-9 || r.rotation_error > 1e-9) {
        throw Error(ErrorKind::kInvalidArgument, "grasp fixture path leaves the reachable workspace");
      }
      q = r.q;
    }
    fx.q.row(t) = q.transpose();
    fx.ee.push_back(fk(model, q));
  }
  fx.points0.resize(3, opts.grasped + opts.fixed);
  for (int i = 0; i < opts.grasped; ++i) {
    Eigen::Vector3d off(unit(rng), unit(rng), unit(rng));
    fx.points0.col(i) = fx.grasp.translation() + opts.object_radius * off / std::max(1.0, off.norm());
    fx.grasped.push_back(i);
  }
  for (int i = opts.grasped; i < opts.grasped + opts.fixed; ++i) {
    const Eigen::Vector3d off(unit(rng), unit(rng), 0.2 * unit(rng));
    fx.points0.col(i) = fx.grasp.translation() - 0.2 * dir + 0.05 * off;
  }
  fx.flow = rollout_flow(rigid_grasp_rollout(fx.grasp, fx.ee, fx.points0, fx.grasped));
  return fx;
}

}  // namespace objflow::synth
