#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "objflow/pipeline/config.hpp"
#include "objflow/pipeline/hash.hpp"
#include "objflow/pipeline/log.hpp"
#include "objflow/pipeline/stages.hpp"
#include "objflow/pipeline/validate.hpp"
#include "objflow/seed.hpp"

namespace objflow::pipeline {

enum ExitCode : int { kExitOk = 0, kExitValidation = 2, kExitStage = 3, kExitNotConverged = 4 };

/// Exit code for an error raised while loading or checking inputs.
inline int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::kValidation:
    case ErrorKind::kIo:
    case ErrorKind::kInvalidArgument:
      return kExitValidation;
    default:
      return kExitStage;
  }
}

struct RunResult {
  int exit_code = kExitOk;
  std::string message;
  nlohmann::json manifest;
  std::string manifest_path;
};

/// Every file name a run may write into its output directory.
inline const std::vector<std::string>& run_output_names() {
  static const std::vector<std::string> names = {
      "calibration.json", "flow.csv",          "flow.json",       "movable.json",     "movable_flow.csv",
      "movable_flow.json", "trajectory.csv",   "poses.csv",       "joint_targets.csv", "costs.json",
      "episode.json",     "reward_trace.csv",  "door_summary.json", "manifest.json"};
  return names;
}

/// Every file the bundle references, in a stable order.
inline std::vector<std::string> bundle_files(const std::string& manifest) {
  const BundlePaths p = read_bundle_manifest(manifest);
  std::vector<std::string> out = {manifest, p.camera, p.tracks};
  if (!p.visibility.empty()) out.push_back(p.visibility);
  out.push_back(p.ref_depth);
  out.push_back(p.object_mask);
  for (const auto& f : list_depth_files(p.depth_dir)) out.push_back(f);
  if (!p.part_mask_dir.empty())
    for (const auto& f : list_depth_files(p.part_mask_dir)) out.push_back(f);
  return out;
}

/// Scripted door policy from JSON; schema problems are validation errors.
inline door::ScriptedPolicy load_policy(const std::string& path) {
  try {
    return door::policy_from_json(io::read_json(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kIo) throw;
    throw Error(ErrorKind::kValidation, path + ": " + e.what());
  }
}

namespace detail {

struct PlannerInputs {
  std::optional<TrajoptInputs> trajopt;
  std::optional<door::ScriptedPolicy> policy;
};

}  // namespace detail

/// calibrate -> lift -> filter-movable -> one planner stage. Every input is
/// validated before the first stage starts; a failing stage stops the run and
/// leaves earlier outputs in place. manifest.json is written atomically last.
inline RunResult run_pipeline(const PipelineConfig& cfg, const log::Logger& logger = log::Logger()) {
  namespace fs = std::filesystem;
  using clock = std::chrono::steady_clock;
  RunResult res;
  const fs::path out_dir(cfg.output_dir);
  nlohmann::json stages = nlohmann::json::array();
  nlohmann::json inputs = nlohmann::json::array();
  std::vector<std::string> written;

  const auto finish = [&](int code, const std::string& msg) {
    res.exit_code = code;
    res.message = msg;
    nlohmann::json outputs = nlohmann::json::array();
    for (const auto& f : written) {
      if (fs::exists(out_dir / f)) outputs.push_back({{"path", f}, {"sha256", hash::sha256_file((out_dir / f).string())}});
    }
    res.manifest = {{"tool", "objflow"},
                    {"version", kToolVersion},
                    {"schema_version", cfg.schema_version},
                    {"seed", cfg.seed},
                    {"planner", to_string(cfg.planner)},
                    {"config_sha256", hash::sha256_hex(cfg.snapshot.dump())},
                    {"config", cfg.snapshot},
                    {"inputs", inputs},
                    {"stages", stages},
                    {"outputs", outputs},
                    {"status", code == kExitOk ? "ok" : "failed"},
                    {"exit_code", code},
                    {"message", msg}};
    fs::create_directories(out_dir);
    res.manifest_path = (out_dir / "manifest.json").string();
    io::write_json(res.manifest_path, res.manifest);
    logger.write(code == kExitOk ? log::Level::kInfo : log::Level::kError, "run", code == kExitOk ? "finished" : "failed",
                 {{"exit_code", code}, {"message", msg}, {"manifest", res.manifest_path}});
    return res;
  };

  // Fail-fast validation of everything the stages will read.
  detail::PlannerInputs planner_inputs;
  {
    const auto t0 = clock::now();
    std::vector<std::string> violations = validate_bundle(cfg.bundle).violations;
    try {
      if (cfg.planner == PlannerKind::kTrajopt) planner_inputs.trajopt = load_trajopt_inputs(cfg.trajopt);
      if (cfg.planner == PlannerKind::kDoor) planner_inputs.policy = load_policy(cfg.door.policy);
    } catch (const Error& e) {
      violations.push_back(e.what());
    }
    std::vector<std::string> files;
    if (violations.empty()) {
      files = bundle_files(cfg.bundle);
      if (cfg.planner == PlannerKind::kTrajopt) {
        files.push_back(cfg.trajopt.robot);
        files.push_back(cfg.trajopt.grasps);
        if (!cfg.trajopt.thumb.empty()) files.push_back(cfg.trajopt.thumb);
      }
      if (cfg.planner == PlannerKind::kDoor) files.push_back(cfg.door.policy);
      for (const auto& f : files) inputs.push_back({{"path", f}, {"sha256", hash::sha256_file(f)}});
    }
    const double secs = std::chrono::duration<double>(clock::now() - t0).count();
    nlohmann::json st = {{"name", "validate"}, {"status", violations.empty() ? "ok" : "failed"}, {"seconds", secs}};
    if (!violations.empty()) {
      st["violations"] = violations;
      stages.push_back(st);
      for (const auto& v : violations) logger.error("validate", v);
      std::string msg = "validation failed: " + violations.front();
      for (std::size_t k = 1; k < violations.size(); ++k) msg += "; " + violations[k];
      return finish(kExitValidation, msg);
    }
    stages.push_back(st);
    logger.info("validate", "inputs ok", {{"files", files.size()}, {"seconds", secs}});
  }

  fs::create_directories(out_dir);
  for (const auto& name : run_output_names()) fs::remove(out_dir / name);

  // Run one stage: time it, record its outputs, convert errors to a failed entry.
  int planner_code = kExitOk;
  std::string planner_msg;
  const auto stage = [&](const char* name, const std::function<Files()>& body) {
    logger.info(name, "start");
    const auto t0 = clock::now();
    nlohmann::json st = {{"name", name}};
    try {
      const Files f = body();
      written.insert(written.end(), f.begin(), f.end());
      st["status"] = "ok";
      st["outputs"] = f;
    } catch (const Error& e) {
      st["status"] = "failed";
      st["error_kind"] = to_string(e.kind());
      st["error"] = e.what();
    } catch (const std::exception& e) {
      st["status"] = "failed";
      st["error"] = e.what();
    }
    st["seconds"] = std::chrono::duration<double>(clock::now() - t0).count();
    stages.push_back(st);
    if (st["status"] == "ok") {
      logger.info(name, "done", {{"seconds", st["seconds"]}});
      return true;
    }
    logger.error(name, st["error"].get<std::string>(), {{"seconds", st["seconds"]}});
    return false;
  };
  const auto stage_failure = [&] {
    const auto& st = stages.back();
    return finish(kExitStage, "stage " + st["name"].get<std::string>() + " failed: " + st["error"].get<std::string>());
  };

  std::optional<FlowBundle> loaded;
  CalibrationStage calib;
  if (!stage("calibrate", [&] {
        loaded.emplace(load_bundle(cfg.bundle));
        calib = run_calibrate(*loaded, cfg.calibrate);
        logger.info("calibrate", "fit", {{"s", calib.calib.scale}, {"b", calib.calib.shift}, {"pixels", calib.pixels}});
        return write_calibration(out_dir, calib, cfg.calibrate);
      }))
    return stage_failure();

  LiftResult lift;
  if (!stage("lift", [&] {
        lift = lift_flow(*loaded, calib.calib);
        logger.info("lift", "lifted", {{"frames", lift.flow.frames()}, {"points", lift.flow.points()},
                                       {"demoted_invalid_depth", lift.diagnostics.demoted_invalid_depth},
                                       {"demoted_out_of_bounds", lift.diagnostics.demoted_out_of_bounds}});
        return write_lift(out_dir, lift, calib.calib);
      }))
    return stage_failure();

  MovableResult movable;
  ObjectFlow3D movable_flow;
  if (!stage("filter-movable", [&] {
        movable = filter_movable(loaded->tracks, loaded->part_masks, cfg.movable_threshold_px);
        if (movable.movable.empty()) throw Error(ErrorKind::kNoTarget, "no track moves by at least " + io::format_double(cfg.movable_threshold_px) + " px per step");
        movable_flow = subset_points(lift.flow, movable.movable, &movable.visible);
        logger.info("filter-movable", "classified", {{"movable", movable.movable.size()}, {"unclassified", movable.unclassified.size()}});
        return write_movable(out_dir, movable, lift.flow, cfg.movable_threshold_px);
      }))
    return stage_failure();

  bool ok = true;
  switch (cfg.planner) {
    case PlannerKind::kTrajopt:
      ok = stage("trajopt", [&] {
        std::vector<Eigen::Index> all(static_cast<std::size_t>(lift.flow.points()));
        std::iota(all.begin(), all.end(), Eigen::Index{0});
        const ObjectFlow3D masked = subset_points(lift.flow, all, &movable.visible);
        const TrajoptStage s = run_trajopt(masked, movable.movable, *planner_inputs.trajopt, cfg.trajopt);
        logger.info("trajopt", "optimized", {{"converged", s.result.converged}, {"iterations", s.result.iterations},
                                             {"task", s.result.costs.task}, {"stop_reason", s.result.stop_reason},
                                             {"resampled", s.resampled.poses.size()}});
        if (!s.result.converged) {
          planner_code = kExitNotConverged;
          planner_msg = "trajectory optimization did not converge: " + s.result.stop_reason;
        }
        return write_trajopt(out_dir, s, cfg.trajopt);
      });
      break;
    case PlannerKind::kPushT:
      ok = stage("pusht", [&] {
        const std::uint64_t seed = derive_seed(cfg.seed, "pusht");
        const push::EpisodeLog log = run_pusht(movable_flow, cfg.pusht, seed);
        logger.info("pusht", push_summary(log), {{"success", log.success}, {"pushes", log.pushes.size()}});
        if (!log.success) {
          planner_code = kExitNotConverged;
          planner_msg = "push episode ended without reaching the goal";
        }
        return write_pusht(out_dir, log, cfg.pusht.dynamics, seed);
      });
      break;
    case PlannerKind::kDoor:
      ok = stage("door-eval", [&] {
        const door::EpisodeTrace trace = run_door(movable_flow, *planner_inputs.policy, cfg.door);
        logger.info("door-eval", "evaluated", {{"success", trace.success}, {"success_step", trace.success_step},
                                               {"final_reward", trace.rows.empty() ? 0.0 : trace.rows.back().reward}});
        if (!trace.success) {
          planner_code = kExitNotConverged;
          planner_msg = "door episode ended below the success angle";
        }
        return write_door(out_dir, trace, cfg.door.reward);
      });
      break;
  }
  if (!ok) return stage_failure();
  return finish(planner_code, planner_code == kExitOk ? "ok" : planner_msg);
}

}  // namespace objflow::pipeline
