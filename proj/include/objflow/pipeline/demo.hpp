#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "objflow/depthflow/io.hpp"
#include "objflow/doorreward/reward.hpp"
#include "objflow/kinematics/kinematics.hpp"
#include "objflow/pushdomain/planner.hpp"
#include "objflow/synthetic.hpp"
#include "objflow/trajopt/io.hpp"

// Self-contained demo inputs for `objflow run`: a rendered bundle plus every
// planner input, under one directory with a config.json next to them.
namespace objflow::demo {

namespace fs = std::filesystem;

enum class Scenario { kTrajopt, kPushT, kDoor };

inline Scenario parse_scenario(std::string_view s) {
  if (s == "trajopt") return Scenario::kTrajopt;
  if (s == "pusht") return Scenario::kPushT;
  if (s == "door") return Scenario::kDoor;
  throw Error(ErrorKind::kInvalidArgument, "scenario must be trajopt, pusht or door, got '" + std::string(s) + "'");
}

inline synth::RenderOptions render_options(bool part_masks) {
  synth::RenderOptions o;
  o.splat_radius = 0;  // one pixel per point, so neighbours never occlude each other
  o.part_masks = part_masks;
  o.occlusion = true;
  return o;
}

/// Camera at `eye` aimed at `target`, image x level with the ground.
inline CameraModel look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, double focal = 500.0, int width = 640,
                           int height = 480) {
  Eigen::Matrix3d r;
  r.col(2) = (target - eye).normalized();
  r.col(0) = r.col(2).cross(Eigen::Vector3d::UnitZ()).normalized();
  r.col(1) = r.col(2).cross(r.col(0));
  return {focal, focal, 0.5 * (width - 1), 0.5 * (height - 1), width, height, RigidTransform(r, eye)};
}

inline nlohmann::json base_config(std::uint64_t seed) {
  return {{"schema_version", 1}, {"seed", seed}, {"bundle", "bundle/bundle.json"}, {"output_dir", "out"}};
}

/// Arm carrying a rigid object along a smooth path, seen from above. Static
/// points sit beside the object. Two decoy grasps and a thumb track near the
/// true grasp complete the inputs.
inline std::string write_trajopt_demo(const fs::path& dir, std::uint64_t seed) {
  const RobotModel model = panda_like_arm();
  Eigen::VectorXd q0(7);
  q0 << 0.0, -0.3, 0.0, -2.0, 0.0, 1.8, 0.8;
  synth::GraspFixtureOptions opts;
  opts.frames = 20;
  opts.grasped = 40;
  opts.fixed = 12;
  opts.object_radius = 0.08;
  opts.travel = 0.15;
  const synth::GraspFixture fx = synth::make_grasp_fixture(model, q0, seed, opts);

  const CameraModel cam = synth::top_down_camera(fx.grasp.translation() + Eigen::Vector3d(0.0, 0.0, 0.9));
  std::vector<PointSet3> frames;
  for (Eigen::Index t = 0; t < fx.flow.frames(); ++t) frames.push_back(fx.flow.positions(t));
  write_bundle(dir / "bundle", synth::render_bundle(cam, frames, render_options(false)));

  io::write_json(dir / "robot.json", robot_to_json(model));
  const std::vector<GraspCandidate> grasps = {
      {RigidTransform::from_translation({0.25, 0.0, 0.0}) * fx.grasp, 0.7},
      {fx.grasp, 0.6},
      {RigidTransform::from_translation({0.0, -0.3, 0.05}) * fx.grasp, 0.9}};
  io::write_json(dir / "grasps.json", grasps_to_json(grasps));
  ThumbTrajectory thumb{Eigen::Matrix3Xd::Zero(3, fx.flow.frames()), Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(fx.flow.frames(), false)};
  thumb.positions.col(2) = fx.grasp.translation() + Eigen::Vector3d(0.004, -0.003, 0.002);
  thumb.detected[2] = true;
  io::write_file_atomic(dir / "thumb.csv", encode_thumb(thumb));

  nlohmann::json cfg = base_config(seed);
  cfg["planner"] = {{"kind", "trajopt"},
                    {"trajopt", {{"robot", "robot.json"}, {"grasps", "grasps.json"}, {"thumb", "thumb.csv"},
                                 {"weights", {10.0, 100.0, 1.0, 0.01}}, {"grasp_radius", 0.1}}}};
  io::write_json(dir / "config.json", cfg);
  return (dir / "config.json").string();
}

/// T-block slid and turned toward the origin on a table, seen from above.
/// The rendered particles sit on the block's top face; a grid of table
/// points stays still.
inline std::string write_pusht_demo(const fs::path& dir, std::uint64_t seed) {
  const push::TShape shape;
  const push::Pose2 start{0.09, -0.06, 0.5}, goal{0.0, 0.0, 0.0};
  const Eigen::Matrix2Xd body = push::block_particles(shape);
  const std::vector<push::Pose2> poses = push::interpolate_poses(start, goal, 40);
  const int table = 16;
  std::vector<PointSet3> frames;
  for (const auto& p : poses) {
    PointSet3 f(3, body.cols() + table);
    f.topLeftCorner(2, body.cols()) = p.apply(body);
    f.row(2).head(body.cols()).setConstant(0.02);
    for (int k = 0; k < table; ++k) f.col(body.cols() + k) = Eigen::Vector3d(-0.3 + 0.04 * (k % 4), 0.12 + 0.04 * (k / 4), 0.0);
    frames.push_back(f);
  }
  const CameraModel cam = synth::top_down_camera({0.0, 0.0, 0.6});
  write_bundle(dir / "bundle", synth::render_bundle(cam, frames, render_options(false)));

  nlohmann::json cfg = base_config(seed);
  cfg["planner"] = {{"kind", "pusht"}, {"pusht", {{"dynamics", "oracle"}, {"start_pose", {start.x, start.y, start.theta}}}}};
  io::write_json(dir / "config.json", cfg);
  return (dir / "config.json").string();
}

/// Door swinging open about its hinge, seen obliquely from the front, with a scripted
/// opener policy.
inline std::string write_door_demo(const fs::path& dir, std::uint64_t seed) {
  const door::DoorGeometry g;
  const RigidTransform frame = RigidTransform::from_translation({-0.1, 0.6, 0.0});
  const ObjectFlow3D local = door::hinge_flow(door::panel_particles(g, 6, 7), 1.4, 30);
  std::vector<PointSet3> frames;
  for (Eigen::Index t = 0; t < local.frames(); ++t) frames.push_back(frame.apply(local.positions(t)));
  const CameraModel cam = look_at({0.5, -0.1, 0.45}, {0.0, 0.65, 0.15});
  write_bundle(dir / "bundle", synth::render_bundle(cam, frames, render_options(true)));

  io::write_json(dir / "policy.json", door::policy_to_json(door::scripted_opener()));
  nlohmann::json cfg = base_config(seed);
  cfg["planner"] = {{"kind", "door"},
                    {"door", {{"reward", "flow"}, {"policy", "policy.json"}, {"door_frame", transform_to_json(frame)},
                              {"ee_start", {0.0, -0.2, 0.3}}}}};
  io::write_json(dir / "config.json", cfg);
  return (dir / "config.json").string();
}

/// Writes the scenario under `dir` and returns the config path. An existing
/// bundle directory there is replaced.
inline std::string write_demo(const fs::path& dir, Scenario s, std::uint64_t seed) {
  fs::remove_all(dir / "bundle");
  fs::create_directories(dir);
  switch (s) {
    case Scenario::kTrajopt: return write_trajopt_demo(dir, seed);
    case Scenario::kPushT: return write_pusht_demo(dir, seed);
    case Scenario::kDoor: return write_door_demo(dir, seed);
  }
  return {};
}

}  // namespace objflow::demo
