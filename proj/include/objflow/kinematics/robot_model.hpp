#pragma once

#include <Eigen/Dense>

#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "objflow/error.hpp"
#include "objflow/io/text.hpp"
#include "objflow/se3geom/camera.hpp"
#include "objflow/se3geom/rigid_transform.hpp"

namespace objflow {

/// Revolute joint: fixed `origin` from the previous link, then rotation about `axis`.
struct RevoluteJoint {
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  RigidTransform origin;
  double lower = -3.14159;
  double upper = 3.14159;
};

/// Serial chain of revolute joints.
class RobotModel {
 public:
  RobotModel() = default;

  RobotModel(std::vector<RevoluteJoint> joints, RigidTransform ee_offset, RigidTransform base = {})
      : joints_(std::move(joints)), ee_offset_(ee_offset), base_(base) {
    for (std::size_t j = 0; j < joints_.size(); ++j) {
      const auto& jt = joints_[j];
      if (std::abs(jt.axis.norm() - 1.0) > 1e-9) {
        std::ostringstream os;
        os << "joint " << j << " axis is not unit length (norm " << jt.axis.norm() << ")";
        throw Error(ErrorKind::kInvalidArgument, os.str());
      }
      if (!(jt.lower < jt.upper)) {
        std::ostringstream os;
        os << "joint " << j << " limits are not ordered";
        throw Error(ErrorKind::kInvalidArgument, os.str());
      }
    }
  }

  int dof() const { return static_cast<int>(joints_.size()); }
  const std::vector<RevoluteJoint>& joints() const { return joints_; }
  const RevoluteJoint& joint(int j) const { return joints_.at(static_cast<std::size_t>(j)); }
  const RigidTransform& ee_offset() const { return ee_offset_; }
  const RigidTransform& base() const { return base_; }

  /// Same chain mounted on a different base.
  RobotModel rebased(const RigidTransform& base) const { return {joints_, ee_offset_, base}; }

  Eigen::VectorXd lower_limits() const {
    Eigen::VectorXd v(dof());
    for (int j = 0; j < dof(); ++j) v[j] = joints_[j].lower;
    return v;
  }
  Eigen::VectorXd upper_limits() const {
    Eigen::VectorXd v(dof());
    for (int j = 0; j < dof(); ++j) v[j] = joints_[j].upper;
    return v;
  }
  Eigen::VectorXd mid_configuration() const { return 0.5 * (lower_limits() + upper_limits()); }

  Eigen::VectorXd clamp(const Eigen::VectorXd& q) const {
    return q.cwiseMax(lower_limits()).cwiseMin(upper_limits());
  }

 private:
  std::vector<RevoluteJoint> joints_;
  RigidTransform ee_offset_;
  RigidTransform base_;
};

// Robot file: {"joints": [{axis, origin: {translation, quaternion_wxyz}, limits: [lo, hi]}...],
//              "ee_offset": {...}, optional "base": {...}}

inline RobotModel robot_from_json(const nlohmann::json& j) {
  try {
    if (!j.contains("joints") || !j.at("joints").is_array()) throw Error(ErrorKind::kValidation, "robot file needs a joints list");
    std::vector<RevoluteJoint> joints;
    for (const auto& jj : j.at("joints")) {
      RevoluteJoint joint;
      joint.axis = detail::vec3_from_json(jj.at("axis"), "axis");
      if (std::abs(joint.axis.norm() - 1.0) > 1e-9) throw Error(ErrorKind::kValidation, "joint axis must be unit length");
      joint.origin = transform_from_json(jj.at("origin"));
      const auto& lim = jj.at("limits");
      if (!lim.is_array() || lim.size() != 2) throw Error(ErrorKind::kValidation, "limits must be [lo, hi]");
      joint.lower = lim[0].get<double>();
      joint.upper = lim[1].get<double>();
      joints.push_back(joint);
    }
    const RigidTransform ee = j.contains("ee_offset") ? transform_from_json(j.at("ee_offset")) : RigidTransform{};
    const RigidTransform base = j.contains("base") ? transform_from_json(j.at("base")) : RigidTransform{};
    return {std::move(joints), ee, base};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kValidation, std::string("robot file: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kValidation) throw;
    throw Error(ErrorKind::kValidation, std::string("robot file: ") + e.what());
  }
}

inline nlohmann::json robot_to_json(const RobotModel& model) {
  nlohmann::json joints = nlohmann::json::array();
  for (const auto& jt : model.joints()) {
    joints.push_back({{"axis", {jt.axis.x(), jt.axis.y(), jt.axis.z()}},
                      {"origin", transform_to_json(jt.origin)},
                      {"limits", {jt.lower, jt.upper}}});
  }
  return {{"joints", joints}, {"ee_offset", transform_to_json(model.ee_offset())}, {"base", transform_to_json(model.base())}};
}

inline RobotModel load_robot(const std::string& path) { return robot_from_json(io::read_json(path)); }

/// Seven-joint arm with Panda-like modified DH geometry and joint ranges.
/// Illustrative values, not a calibrated description of any real robot.
inline RobotModel panda_like_arm() {
  struct Dh { double a, d, alpha, lo, hi; };
  constexpr double kPi = 3.14159265358979323846;
  const Dh dh[7] = {
      {0.0, 0.333, 0.0, -2.8973, 2.8973},       {0.0, 0.0, -kPi / 2, -1.7628, 1.7628},
      {0.0, 0.316, kPi / 2, -2.8973, 2.8973},   {0.0825, 0.0, kPi / 2, -3.0718, -0.0698},
      {-0.0825, 0.384, -kPi / 2, -2.8973, 2.8973}, {0.0, 0.0, kPi / 2, -0.0175, 3.7525},
      {0.088, 0.0, kPi / 2, -2.8973, 2.8973},
  };
  std::vector<RevoluteJoint> joints;
  for (const auto& p : dh) {
    const RigidTransform rx = RigidTransform::from_axis_angle(Eigen::Vector3d::UnitX(), p.alpha);
    const RigidTransform origin = rx * RigidTransform::from_translation({p.a, 0.0, p.d});
    joints.push_back({Eigen::Vector3d::UnitZ(), origin.normalized(), p.lo, p.hi});
  }
  const RigidTransform flange = RigidTransform::from_translation({0.0, 0.0, 0.107});
  const RigidTransform hand = RigidTransform::from_axis_angle(Eigen::Vector3d::UnitZ(), -kPi / 4, {0.0, 0.0, 0.1034});
  return {std::move(joints), (flange * hand).normalized()};
}

}  // namespace objflow
