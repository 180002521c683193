#pragma once

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "objflow/io/text.hpp"
#include "objflow/se3geom/camera.hpp"
#include "objflow/trajopt/grasp.hpp"
#include "objflow/trajopt/optimizer.hpp"

namespace objflow {

/// Grasp file: JSON list (or {"grasps": [...]}) of {translation, quaternion_wxyz, score}.
inline std::vector<GraspCandidate> grasps_from_json(const nlohmann::json& j) {
  const nlohmann::json& list = j.is_object() && j.contains("grasps") ? j.at("grasps") : j;
  if (!list.is_array()) throw Error(ErrorKind::kValidation, "grasp file must hold a list of grasps");
  std::vector<GraspCandidate> out;
  for (const auto& g : list) {
    GraspCandidate c{transform_from_json(g), g.value("score", 0.0)};
    if (!std::isfinite(c.score)) throw Error(ErrorKind::kValidation, "grasp score must be finite");
    out.push_back(c);
  }
  return out;
}

inline nlohmann::json grasps_to_json(const std::vector<GraspCandidate>& grasps) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& g : grasps) {
    nlohmann::json e = transform_to_json(g.pose);
    e["score"] = g.score;
    list.push_back(e);
  }
  return {{"grasps", list}};
}

inline std::vector<GraspCandidate> load_grasps(const std::string& path) { return grasps_from_json(io::read_json(path)); }

/// Thumb file: CSV "t,x,y,z,detected".
inline ThumbTrajectory load_thumb(const std::string& path) {
  const auto rows = io::read_csv(path, "t,x,y,z,detected");
  long frames = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::string where = path + ":" + std::to_string(r + 2);
    if (rows[r].size() != 5) throw Error(ErrorKind::kValidation, where + ": expected 5 fields");
    frames = std::max(frames, io::parse_int(rows[r][0], where) + 1);
  }
  ThumbTrajectory thumb{Eigen::Matrix3Xd::Zero(3, frames), Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(frames, false)};
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::string where = path + ":" + std::to_string(r + 2);
    const long t = io::parse_int(rows[r][0], where);
    if (t < 0) throw Error(ErrorKind::kValidation, where + ": negative frame index");
    const bool det = io::parse_bool(rows[r][4], where);
    if (det) {
      thumb.positions.col(t) = Eigen::Vector3d(io::parse_double(rows[r][1], where), io::parse_double(rows[r][2], where),
                                               io::parse_double(rows[r][3], where));
      if (!thumb.positions.col(t).allFinite()) throw Error(ErrorKind::kValidation, where + ": detected thumb is not finite");
    }
    thumb.detected[t] = det;
  }
  return thumb;
}

inline std::string encode_thumb(const ThumbTrajectory& thumb) {
  std::ostringstream os;
  os << "t,x,y,z,detected\n";
  for (Eigen::Index t = 0; t < thumb.frames(); ++t) {
    os << t;
    for (int k = 0; k < 3; ++k) os << ',' << (thumb.detected[t] ? io::format_double(thumb.positions(k, t)) : "nan");
    os << ',' << (thumb.detected[t] ? 1 : 0) << '\n';
  }
  return os.str();
}

/// "wf,wr,ws,wm"
inline CostWeights parse_weights(const std::string& s) {
  const auto fields = io::split_csv_line(s);
  if (fields.size() != 4) throw Error(ErrorKind::kValidation, "weights must be four comma-separated numbers");
  CostWeights w{io::parse_double(fields[0], "weights"), io::parse_double(fields[1], "weights"),
                io::parse_double(fields[2], "weights"), io::parse_double(fields[3], "weights")};
  try {
    w.check();
  } catch (const Error& e) {
    throw Error(ErrorKind::kValidation, e.what());
  }
  return w;
}

inline std::string encode_joint_trajectory(const JointTrajectory& traj) {
  std::ostringstream os;
  os << "step";
  for (Eigen::Index j = 0; j < traj.configurations.cols(); ++j) os << ",q" << j;
  os << '\n';
  for (Eigen::Index t = 0; t < traj.steps(); ++t) {
    os << t;
    for (Eigen::Index j = 0; j < traj.configurations.cols(); ++j) os << ',' << io::format_double(traj.configurations(t, j));
    os << '\n';
  }
  return os.str();
}

inline std::string encode_poses(const std::vector<RigidTransform>& poses) {
  std::ostringstream os;
  os << "x,y,z,qw,qx,qy,qz\n";
  for (const auto& p : poses) {
    const Eigen::Vector4d q = p.quaternion_wxyz();
    os << io::format_double(p.translation().x()) << ',' << io::format_double(p.translation().y()) << ','
       << io::format_double(p.translation().z()) << ',' << io::format_double(q[0]) << ',' << io::format_double(q[1])
       << ',' << io::format_double(q[2]) << ',' << io::format_double(q[3]) << '\n';
  }
  return os.str();
}

inline nlohmann::json costs_to_json(const CostBreakdown& c, const CostWeights& w) {
  return {{"task", c.task},
          {"reachability", c.reachability},
          {"smoothness", c.smoothness},
          {"manipulability", c.manipulability},
          {"total", c.total},
          {"weights", {{"task", w.task}, {"reachability", w.reachability}, {"smoothness", w.smoothness}, {"manipulability", w.manipulability}}}};
}

}  // namespace objflow
