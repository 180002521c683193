#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>

#include <json.hpp>

#include "objflow/depthflow/calibration.hpp"
#include "objflow/doorreward/reward.hpp"
#include "objflow/io/text.hpp"
#include "objflow/pushdomain/planner.hpp"
#include "objflow/se3geom/camera.hpp"
#include "objflow/trajopt/cost.hpp"
#include "objflow/trajopt/grasp.hpp"

namespace objflow::pipeline {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

struct TrajoptStageConfig {
  std::string robot;
  std::string grasps;
  std::string thumb;  // optional
  CostWeights weights;
  int horizon = 0;  // 0: one step per flow frame
  int max_iterations = 300;
  double grasp_radius = kGraspedRadius;
};

struct PushStageConfig {
  push::Dynamics dynamics = push::Dynamics::kOracle;
  push::Pose2 start;
  double friction_param = 0.05;
  push::EpisodeConfig episode;
};

struct DoorStageConfig {
  door::RewardKind reward = door::RewardKind::kFlow;
  std::string policy;
  RigidTransform door_frame;
  Eigen::Vector3d ee_start = Eigen::Vector3d::Zero();  // world
};

enum class PlannerKind { kTrajopt, kPushT, kDoor };

inline std::string_view to_string(PlannerKind k) {
  switch (k) {
    case PlannerKind::kTrajopt: return "trajopt";
    case PlannerKind::kPushT: return "pusht";
    case PlannerKind::kDoor: return "door";
  }
  return "trajopt";
}

struct PipelineConfig {
  int schema_version = kSchemaVersion;
  std::uint64_t seed = 0;
  std::string bundle;
  std::string output_dir;
  CalibrationOptions calibrate;
  double movable_threshold_px = 1.0;
  PlannerKind planner = PlannerKind::kTrajopt;
  TrajoptStageConfig trajopt;
  PushStageConfig pusht;
  DoorStageConfig door;
  nlohmann::json snapshot;  // parsed file with flag overrides applied
};

namespace detail {

inline Error config_error(const std::string& where, const std::string& what) {
  return Error(ErrorKind::kValidation, "config " + where + ": " + what);
}

inline void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw config_error(where, "must be an object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || item.key() == a;
    if (!ok) throw config_error(where, "unknown key '" + item.key() + "'");
  }
}

inline double number(const nlohmann::json& j, const char* key, double fallback, double lo, double hi, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw config_error(where + "." + key, "must be a number");
  const double v = j.at(key).get<double>();
  if (!std::isfinite(v) || v < lo || v > hi) {
    throw config_error(where + "." + key, "value " + io::format_double(v) + " outside [" + io::format_double(lo) + ", " + io::format_double(hi) + "]");
  }
  return v;
}

inline int integer(const nlohmann::json& j, const char* key, int fallback, int lo, int hi, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number_integer()) throw config_error(where + "." + key, "must be an integer");
  const long long v = j.at(key).get<long long>();
  if (v < lo || v > hi) throw config_error(where + "." + key, "value " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return static_cast<int>(v);
}

inline std::string path(const nlohmann::json& j, const char* key, const std::filesystem::path& base, bool required, const std::string& where) {
  if (!j.contains(key)) {
    if (required) throw config_error(where, std::string("missing '") + key + "'");
    return {};
  }
  if (!j.at(key).is_string()) throw config_error(where + "." + key, "must be a path string");
  return io::resolve(base, j.at(key).get<std::string>());
}

inline Eigen::VectorXd vec(const nlohmann::json& j, Eigen::Index n, const std::string& where) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n) throw config_error(where, "must have " + std::to_string(n) + " numbers");
  Eigen::VectorXd v(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (!j[static_cast<std::size_t>(k)].is_number()) throw config_error(where, "must hold numbers");
    v[k] = j[static_cast<std::size_t>(k)].get<double>();
  }
  if (!v.allFinite()) throw config_error(where, "must be finite");
  return v;
}

}  // namespace detail

/// Parse a pipeline configuration. Relative paths resolve against `base_dir`.
/// Unknown keys, out-of-range values and a missing seed are validation errors.
inline PipelineConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  using namespace detail;
  check_keys(j, {"schema_version", "seed", "bundle", "output_dir", "calibrate", "filter_movable", "planner"}, "");
  if (!j.contains("schema_version")) throw config_error("", "missing 'schema_version'");
  PipelineConfig c;
  c.schema_version = integer(j, "schema_version", 0, 0, 1 << 20, "");
  if (c.schema_version != kSchemaVersion) throw config_error("schema_version", "unsupported version " + std::to_string(c.schema_version));
  if (!j.contains("seed")) throw config_error("", "missing 'seed'");
  const nlohmann::json& seed = j.at("seed");
  if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0)) {
    throw config_error("seed", "must be a non-negative integer");
  }
  c.seed = j.at("seed").get<std::uint64_t>();
  c.bundle = path(j, "bundle", base_dir, true, "");
  c.output_dir = j.contains("output_dir") ? path(j, "output_dir", base_dir, true, "") : (base_dir / "out").string();

  const nlohmann::json cal = j.value("calibrate", nlohmann::json::object());
  check_keys(cal, {"lower_percentile", "upper_percentile"}, "calibrate");
  c.calibrate.lower_percentile = number(cal, "lower_percentile", 1.0, 0.0, 100.0, "calibrate");
  c.calibrate.upper_percentile = number(cal, "upper_percentile", 99.0, 0.0, 100.0, "calibrate");
  if (!(c.calibrate.lower_percentile < c.calibrate.upper_percentile)) throw config_error("calibrate", "lower_percentile must be below upper_percentile");

  const nlohmann::json mov = j.value("filter_movable", nlohmann::json::object());
  check_keys(mov, {"threshold_px"}, "filter_movable");
  c.movable_threshold_px = number(mov, "threshold_px", 1.0, 0.0, 1e4, "filter_movable");

  if (!j.contains("planner")) throw config_error("", "missing 'planner'");
  const nlohmann::json& pl = j.at("planner");
  check_keys(pl, {"kind", "trajopt", "pusht", "door"}, "planner");
  if (!pl.contains("kind") || !pl.at("kind").is_string()) throw config_error("planner", "missing string 'kind'");
  const std::string kind = pl.at("kind").get<std::string>();
  if (kind == "trajopt") {
    c.planner = PlannerKind::kTrajopt;
    const nlohmann::json t = pl.value("trajopt", nlohmann::json::object());
    check_keys(t, {"robot", "grasps", "thumb", "weights", "horizon", "max_iterations", "grasp_radius"}, "planner.trajopt");
    c.trajopt.robot = path(t, "robot", base_dir, true, "planner.trajopt");
    c.trajopt.grasps = path(t, "grasps", base_dir, true, "planner.trajopt");
    c.trajopt.thumb = path(t, "thumb", base_dir, false, "planner.trajopt");
    if (t.contains("weights")) {
      const Eigen::VectorXd w = vec(t.at("weights"), 4, "planner.trajopt.weights");
      c.trajopt.weights = {w[0], w[1], w[2], w[3]};
      if ((w.array() < 0.0).any()) throw config_error("planner.trajopt.weights", "must be non-negative");
    }
    c.trajopt.horizon = integer(t, "horizon", 0, 0, 100000, "planner.trajopt");
    if (c.trajopt.horizon == 1) throw config_error("planner.trajopt.horizon", "must be 0 (flow length) or at least 2");
    c.trajopt.max_iterations = integer(t, "max_iterations", 300, 1, 100000, "planner.trajopt");
    c.trajopt.grasp_radius = number(t, "grasp_radius", kGraspedRadius, 1e-4, 1.0, "planner.trajopt");
  } else if (kind == "pusht") {
    c.planner = PlannerKind::kPushT;
    const nlohmann::json p = pl.value("pusht", nlohmann::json::object());
    check_keys(p, {"dynamics", "start_pose", "samples", "max_pushes", "lookahead", "step", "d_min", "d_max", "friction_param"}, "planner.pusht");
    if (p.contains("dynamics")) {
      try {
        c.pusht.dynamics = push::parse_dynamics(p.at("dynamics").get<std::string>());
      } catch (const std::exception& e) {
        throw config_error("planner.pusht.dynamics", e.what());
      }
    }
    if (!p.contains("start_pose")) throw config_error("planner.pusht", "missing 'start_pose' [x, y, theta]");
    const Eigen::VectorXd s = vec(p.at("start_pose"), 3, "planner.pusht.start_pose");
    c.pusht.start = {s[0], s[1], push::wrap_angle(s[2])};
    push::EpisodeConfig& e = c.pusht.episode;
    e.samples = integer(p, "samples", 64, 1, 4096, "planner.pusht");
    e.max_pushes = integer(p, "max_pushes", 20, 0, 1000, "planner.pusht");
    e.lookahead = integer(p, "lookahead", kDefaultLookahead, 0, 100000, "planner.pusht");
    e.sim.step = number(p, "step", 0.002, 1e-5, 0.005, "planner.pusht");
    e.sampling.d_min = number(p, "d_min", 0.01, 0.006, 1.0, "planner.pusht");
    e.sampling.d_max = number(p, "d_max", 0.08, 0.006, 1.0, "planner.pusht");
    if (e.sampling.d_max < e.sampling.d_min) throw config_error("planner.pusht", "d_max must be at least d_min");
    c.pusht.friction_param = number(p, "friction_param", 0.05, 1e-4, 1.0, "planner.pusht");
  } else if (kind == "door") {
    c.planner = PlannerKind::kDoor;
    const nlohmann::json d = pl.value("door", nlohmann::json::object());
    check_keys(d, {"reward", "policy", "door_frame", "ee_start"}, "planner.door");
    if (d.contains("reward")) {
      try {
        c.door.reward = door::parse_reward_kind(d.at("reward").get<std::string>());
      } catch (const std::exception& e) {
        throw config_error("planner.door.reward", e.what());
      }
    }
    c.door.policy = path(d, "policy", base_dir, true, "planner.door");
    if (d.contains("door_frame")) {
      try {
        c.door.door_frame = transform_from_json(d.at("door_frame"));
      } catch (const std::exception& e) {
        throw config_error("planner.door.door_frame", e.what());
      }
    }
    if (d.contains("ee_start")) c.door.ee_start = vec(d.at("ee_start"), 3, "planner.door.ee_start");
  } else {
    throw config_error("planner.kind", "must be trajopt, pusht or door, got '" + kind + "'");
  }
  c.snapshot = j;
  return c;
}

inline PipelineConfig load_config(const std::string& path) {
  return parse_config(io::read_json(path), std::filesystem::path(path).parent_path());
}

}  // namespace objflow::pipeline
