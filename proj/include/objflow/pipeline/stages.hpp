#pragma once

#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "objflow/depthflow/baseline.hpp"
#include "objflow/depthflow/calibration.hpp"
#include "objflow/depthflow/io.hpp"
#include "objflow/depthflow/lift.hpp"
#include "objflow/depthflow/matching.hpp"
#include "objflow/depthflow/movable.hpp"
#include "objflow/doorreward/reward.hpp"
#include "objflow/kinematics/kinematics.hpp"
#include "objflow/pipeline/config.hpp"
#include "objflow/pushdomain/planner.hpp"
#include "objflow/trajopt/bspline.hpp"
#include "objflow/trajopt/io.hpp"
#include "objflow/trajopt/optimizer.hpp"

// Stage bodies shared by the subcommands and the full pipeline. Each writer
// returns the files it produced, relative to its output directory.
namespace objflow::pipeline {

namespace fs = std::filesystem;
using Files = std::vector<std::string>;

// ---------------------------------------------------------------------------
// calibrate

struct CalibrationStage {
  ScaleShift calib;
  Eigen::Index pixels = 0;
};

/// Align the first predicted depth map to the metric reference over all pixels.
inline CalibrationStage run_calibrate(const FlowBundle& b, const CalibrationOptions& opts) {
  const PixelMask all = PixelMask::Constant(b.ref_depth.rows(), b.ref_depth.cols(), true);
  return {calibrate_scale_shift(b.depths.front(), b.ref_depth, all, opts),
          calibration_pixels(b.depths.front(), b.ref_depth, all, opts).count()};
}

inline nlohmann::json calibration_to_json(const CalibrationStage& c, const CalibrationOptions& opts) {
  return {{"s", c.calib.scale}, {"b", c.calib.shift}, {"pixels", c.pixels},
          {"lower_percentile", opts.lower_percentile}, {"upper_percentile", opts.upper_percentile}};
}

inline ScaleShift load_calibration(const std::string& path) {
  const nlohmann::json j = io::read_json(path);
  if (!j.contains("s") || !j.contains("b") || !j.at("s").is_number() || !j.at("b").is_number()) {
    throw Error(ErrorKind::kValidation, path + ": calibration needs numeric s and b");
  }
  return {j.at("s").get<double>(), j.at("b").get<double>()};
}

inline Files write_calibration(const fs::path& dir, const CalibrationStage& c, const CalibrationOptions& opts) {
  io::write_json(dir / "calibration.json", calibration_to_json(c, opts));
  return {"calibration.json"};
}

// ---------------------------------------------------------------------------
// lift

inline Files write_lift(const fs::path& dir, const LiftResult& lift, const ScaleShift& calib) {
  const LiftDiagnostics& d = lift.diagnostics;
  write_flow(dir / "flow.csv", lift.flow, &calib,
             {{"demoted_invalid_depth", d.demoted_invalid_depth}, {"demoted_out_of_bounds", d.demoted_out_of_bounds},
              {"empty_frames", d.empty_frames}});
  return {"flow.csv", "flow.json"};
}

// ---------------------------------------------------------------------------
// filter-movable

inline Files write_movable(const fs::path& dir, const MovableResult& m, const ObjectFlow3D& flow, double threshold) {
  nlohmann::json disp = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.mean_displacement.size(); ++i) {
    const double v = m.mean_displacement[i];
    disp.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr));
  }
  io::write_json(dir / "movable.json",
                 {{"threshold_px", threshold}, {"movable", m.movable}, {"unclassified", m.unclassified}, {"mean_displacement_px", disp}});
  write_flow(dir / "movable_flow.csv", subset_points(flow, m.movable, &m.visible), nullptr, {{"source_indices", m.movable}});
  return {"movable.json", "movable_flow.csv", "movable_flow.json"};
}

inline std::vector<Eigen::Index> load_movable_indices(const std::string& path) {
  const nlohmann::json j = io::read_json(path);
  if (!j.contains("movable") || !j.at("movable").is_array()) throw Error(ErrorKind::kValidation, path + ": missing movable index list");
  return j.at("movable").get<std::vector<Eigen::Index>>();
}

// ---------------------------------------------------------------------------
// fit-rigid (baseline)

inline std::string encode_rigid_frames(const std::vector<RigidFrame>& frames) {
  std::ostringstream os;
  os << "t,reliable,correspondences,x,y,z,qw,qx,qy,qz\n";
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const RigidTransform& tr = frames[t].transform;
    const Eigen::Vector4d q = tr.quaternion_wxyz();
    os << t << ',' << (frames[t].reliable ? 1 : 0) << ',' << frames[t].correspondences;
    for (int k = 0; k < 3; ++k) os << ',' << io::format_double(tr.translation()[k]);
    for (int k = 0; k < 4; ++k) os << ',' << io::format_double(q[k]);
    os << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// trajopt

struct TrajoptInputs {
  RobotModel model;
  std::vector<GraspCandidate> grasps;
  std::optional<ThumbTrajectory> thumb;
};

inline TrajoptInputs load_trajopt_inputs(const TrajoptStageConfig& c) {
  TrajoptInputs in{load_robot(c.robot), load_grasps(c.grasps), std::nullopt};
  if (!c.thumb.empty()) in.thumb = load_thumb(c.thumb);
  return in;
}

struct TrajoptStage {
  GraspSelection selection;
  std::vector<Eigen::Index> grasped;
  TrajoptResult result;
  ResampleResult resampled;
  Eigen::MatrixXd joint_targets;  // one ik_dls solution per resampled pose
};

/// Select a grasp, optimize toward the flow, resample the ee path and solve
/// joint targets for each resampled pose.
inline TrajoptStage run_trajopt(const ObjectFlow3D& flow, const std::vector<Eigen::Index>& movable, const TrajoptInputs& in,
                                const TrajoptStageConfig& c) {
  TrajoptStage s;
  PointSet3 movable_points(3, 0);
  {
    std::vector<Eigen::Index> seen;
    for (Eigen::Index i : movable)
      if (flow.visible(0, i)) seen.push_back(i);
    movable_points.resize(3, static_cast<Eigen::Index>(seen.size()));
    for (std::size_t k = 0; k < seen.size(); ++k) movable_points.col(static_cast<Eigen::Index>(k)) = flow.positions(0).col(seen[k]);
  }
  const ThumbTrajectory no_thumb{Eigen::Matrix3Xd(3, 0), Eigen::Array<bool, Eigen::Dynamic, 1>(0)};
  s.selection = select_grasp(in.grasps, in.thumb ? *in.thumb : no_thumb, movable_points);
  s.grasped = grasped_subset(flow, movable, s.selection.grasp.pose, c.grasp_radius);
  if (s.grasped.empty()) throw Error(ErrorKind::kNoGrasp, "no movable point lies within the grasp radius of the selected grasp");
  const int horizon = c.horizon > 0 ? c.horizon : static_cast<int>(flow.frames());
  const IkResult seed = ik_dls(in.model, s.selection.grasp.pose, in.model.mid_configuration());
  LmOptions lm;
  lm.max_iterations = c.max_iterations;
  s.result = optimize_trajectory(in.model, flow, s.selection.grasp.pose, s.grasped, c.weights, seed.q, horizon, lm);
  s.resampled = bspline_resample(s.result.ee_poses);
  s.joint_targets.resize(static_cast<Eigen::Index>(s.resampled.poses.size()), in.model.dof());
  Eigen::VectorXd q = s.result.trajectory.configurations.row(0).transpose();
  for (std::size_t k = 0; k < s.resampled.poses.size(); ++k) {
    q = ik_dls(in.model, s.resampled.poses[k], q).q;
    s.joint_targets.row(static_cast<Eigen::Index>(k)) = q.transpose();
  }
  return s;
}

inline Files write_trajopt(const fs::path& dir, const TrajoptStage& s, const TrajoptStageConfig& c) {
  io::write_file_atomic(dir / "trajectory.csv", encode_joint_trajectory(s.result.trajectory));
  io::write_file_atomic(dir / "poses.csv", encode_poses(s.resampled.poses));
  io::write_file_atomic(dir / "joint_targets.csv", encode_joint_trajectory({s.joint_targets, s.result.trajectory.dt}));
  nlohmann::json report = {{"costs", costs_to_json(s.result.costs, c.weights)},
                           {"converged", s.result.converged},
                           {"iterations", s.result.iterations},
                           {"stop_reason", s.result.stop_reason},
                           {"grasp", {{"index", s.selection.index}, {"reason", to_string(s.selection.reason)},
                                      {"thumb_frame", s.selection.frame}, {"pose", transform_to_json(s.selection.grasp.pose)}}},
                           {"grasped_points", s.grasped},
                           {"resampled_passthrough", s.resampled.passthrough}};
  io::write_json(dir / "costs.json", report);
  return {"trajectory.csv", "poses.csv", "joint_targets.csv", "costs.json"};
}

// ---------------------------------------------------------------------------
// pusht

inline nlohmann::json pose2_to_json(const push::Pose2& p) { return {p.x, p.y, p.theta}; }

inline nlohmann::json episode_to_json(const push::EpisodeLog& log, push::Dynamics dynamics, std::uint64_t seed) {
  nlohmann::json pushes = nlohmann::json::array();
  for (const auto& r : log.pushes) {
    pushes.push_back({{"start", {r.push.start.x(), r.push.start.y()}},
                      {"direction", {r.push.direction.x(), r.push.direction.y()}},
                      {"distance", r.push.distance},
                      {"predicted_cost", r.predicted_cost},
                      {"pose", pose2_to_json(r.pose)},
                      {"t_star", r.t_star},
                      {"subgoal", r.subgoal},
                      {"contact", r.contact}});
  }
  return {{"dynamics", push::to_string(dynamics)}, {"seed", seed},
          {"start", pose2_to_json(log.start)}, {"goal", pose2_to_json(log.goal)},
          {"final_pose", pose2_to_json(log.final_pose)}, {"success", log.success},
          {"pushes", pushes}};
}

inline push::EpisodeLog run_pusht(const ObjectFlow3D& flow, const PushStageConfig& c, std::uint64_t seed) {
  push::TBlockState start;
  start.pose = c.start;
  start.friction_param = c.friction_param;
  push::EpisodeConfig e = c.episode;
  e.seed = seed;
  return push::plan_push_episode(start, flow, c.dynamics, e);
}

inline std::string push_summary(const push::EpisodeLog& log) {
  return std::string("success=") + (log.success ? "true" : "false") + " pushes=" + std::to_string(log.pushes.size());
}

inline Files write_pusht(const fs::path& dir, const push::EpisodeLog& log, push::Dynamics dynamics, std::uint64_t seed) {
  io::write_json(dir / "episode.json", episode_to_json(log, dynamics, seed));
  return {"episode.json"};
}

// ---------------------------------------------------------------------------
// door

inline ObjectFlow3D to_frame(const ObjectFlow3D& flow, const RigidTransform& world_from_frame) {
  const RigidTransform inv = world_from_frame.inverse();
  std::vector<PointSet3> pos;
  for (Eigen::Index t = 0; t < flow.frames(); ++t) pos.push_back(inv.apply(flow.positions(t)));
  return {std::move(pos), flow.visibility()};
}

/// Keep the points visible in every frame (the door reward assumes full visibility).
inline ObjectFlow3D fully_visible_points(const ObjectFlow3D& flow) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < flow.points(); ++i)
    if (flow.visibility().col(i).all()) keep.push_back(i);
  if (keep.empty()) throw Error(ErrorKind::kMatchingFailure, "no door particle is visible in every frame");
  return subset_points(flow, keep);
}

inline door::EpisodeTrace run_door(const ObjectFlow3D& flow_world, const door::ScriptedPolicy& policy, const DoorStageConfig& c) {
  const door::FlowRewardContext ctx(fully_visible_points(to_frame(flow_world, c.door_frame)));
  door::DoorState state;
  state.frame = c.door_frame;
  state.ee = c.ee_start;
  return door::evaluate_scripted_episode(policy, ctx, c.reward, state);
}

inline Files write_door(const fs::path& dir, const door::EpisodeTrace& trace, door::RewardKind kind) {
  std::ostringstream os;
  os << "step,reward,t_star,theta_hinge\n";
  for (const auto& r : trace.rows) {
    os << r.step << ',' << io::format_double(r.reward) << ',' << r.t_star << ',' << io::format_double(r.theta_hinge) << '\n';
  }
  io::write_file_atomic(dir / "reward_trace.csv", os.str());
  io::write_json(dir / "door_summary.json",
                 {{"reward", kind == door::RewardKind::kFlow ? "flow" : "state"},
                  {"success", trace.success},
                  {"success_step", trace.success_step},
                  {"steps", trace.rows.size()},
                  {"final_reward", trace.rows.empty() ? 0.0 : trace.rows.back().reward},
                  {"final_theta_hinge", trace.rows.empty() ? 0.0 : trace.rows.back().theta_hinge}});
  return {"reward_trace.csv", "door_summary.json"};
}

}  // namespace objflow::pipeline
