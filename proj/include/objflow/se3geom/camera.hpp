#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "objflow/error.hpp"
#include "objflow/se3geom/rigid_transform.hpp"

namespace objflow {

/// Pinhole camera. `extrinsics` maps camera-frame points into the robot frame.
class CameraModel {
 public:
  CameraModel(double fx, double fy, double cx, double cy, int width, int height,
              RigidTransform extrinsics = {})
      : fx_(fx), fy_(fy), cx_(cx), cy_(cy), width_(width), height_(height), extrinsics_(extrinsics) {
    if (!(fx > 0.0) || !(fy > 0.0)) throw Error(ErrorKind::kInvalidArgument, "focal lengths must be positive");
    if (width <= 0 || height <= 0) throw Error(ErrorKind::kInvalidArgument, "image size must be positive");
    if (!(cx > 0.0 && cx < width) || !(cy > 0.0 && cy < height)) {
      throw Error(ErrorKind::kInvalidArgument, "principal point outside the image");
    }
  }

  double fx() const { return fx_; }
  double fy() const { return fy_; }
  double cx() const { return cx_; }
  double cy() const { return cy_; }
  int width() const { return width_; }
  int height() const { return height_; }
  const RigidTransform& extrinsics() const { return extrinsics_; }

  CameraModel with_extrinsics(const RigidTransform& extrinsics) const {
    return {fx_, fy_, cx_, cy_, width_, height_, extrinsics};
  }

  /// Continuous pixel coordinates; pixel k covers [k - 0.5, k + 0.5).
  bool in_bounds(const Eigen::Vector2d& px) const {
    return std::isfinite(px.x()) && std::isfinite(px.y()) && px.x() >= -0.5 && px.y() >= -0.5 &&
           px.x() < width_ - 0.5 && px.y() < height_ - 0.5;
  }

  /// Lift a pixel at metric depth (camera z) into the robot frame.
  Eigen::Vector3d backproject(const Eigen::Vector2d& px, double depth) const {
    if (!std::isfinite(depth) || depth <= 0.0) {
      std::ostringstream os;
      os << "depth " << depth << " at pixel (" << px.x() << ", " << px.y() << ")";
      throw Error(ErrorKind::kInvalidDepth, os.str());
    }
    if (!in_bounds(px)) {
      std::ostringstream os;
      os << "pixel (" << px.x() << ", " << px.y() << ") outside " << width_ << "x" << height_;
      throw Error(ErrorKind::kOutOfBounds, os.str());
    }
    const Eigen::Vector3d cam(depth * (px.x() - cx_) / fx_, depth * (px.y() - cy_) / fy_, depth);
    return extrinsics_ * cam;
  }

  /// Project a robot-frame point; returns pixel and writes the camera-frame depth.
  Eigen::Vector2d project(const Eigen::Vector3d& robot_point, double* depth = nullptr) const {
    const Eigen::Vector3d cam = extrinsics_.inverse() * robot_point;
    if (depth != nullptr) *depth = cam.z();
    return {fx_ * cam.x() / cam.z() + cx_, fy_ * cam.y() / cam.z() + cy_};
  }

 private:
  double fx_, fy_, cx_, cy_;
  int width_, height_;
  RigidTransform extrinsics_;
};

inline Eigen::Vector3d backproject(const Eigen::Vector2d& px, double depth, const CameraModel& cam) {
  return cam.backproject(px, depth);
}

namespace detail {

inline Eigen::Vector3d vec3_from_json(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorKind::kValidation, std::string(what) + " must be a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace detail

/// {translation: [x,y,z], quaternion_wxyz: [w,x,y,z]}; quaternion norm must be within 1e-6 of 1.
inline RigidTransform transform_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("translation") || !j.contains("quaternion_wxyz")) {
    throw Error(ErrorKind::kValidation, "transform needs translation and quaternion_wxyz");
  }
  const Eigen::Vector3d t = detail::vec3_from_json(j.at("translation"), "translation");
  const auto& q = j.at("quaternion_wxyz");
  if (!q.is_array() || q.size() != 4) throw Error(ErrorKind::kValidation, "quaternion_wxyz must have 4 entries");
  const Eigen::Vector4d wxyz(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>());
  if (std::abs(wxyz.norm() - 1.0) > 1e-6) {
    std::ostringstream os;
    os << "quaternion norm " << wxyz.norm() << " is not within 1e-6 of 1";
    throw Error(ErrorKind::kValidation, os.str());
  }
  return RigidTransform::from_quaternion(wxyz, t);
}

inline nlohmann::json transform_to_json(const RigidTransform& t) {
  const Eigen::Vector4d q = t.quaternion_wxyz();
  return {{"translation", {t.translation().x(), t.translation().y(), t.translation().z()}},
          {"quaternion_wxyz", {q[0], q[1], q[2], q[3]}}};
}

inline CameraModel camera_from_json(const nlohmann::json& j) {
  for (const char* key : {"fx", "fy", "cx", "cy", "width", "height", "extrinsics"}) {
    if (!j.contains(key)) throw Error(ErrorKind::kValidation, std::string("camera file missing key '") + key + "'");
  }
  try {
    return CameraModel(j.at("fx").get<double>(), j.at("fy").get<double>(), j.at("cx").get<double>(),
                       j.at("cy").get<double>(), j.at("width").get<int>(), j.at("height").get<int>(),
                       transform_from_json(j.at("extrinsics")));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kValidation) throw;
    throw Error(ErrorKind::kValidation, e.what());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kValidation, std::string("camera file: ") + e.what());
  }
}

inline nlohmann::json camera_to_json(const CameraModel& cam) {
  return {{"fx", cam.fx()}, {"fy", cam.fy()}, {"cx", cam.cx()}, {"cy", cam.cy()},
          {"width", cam.width()}, {"height", cam.height()}, {"extrinsics", transform_to_json(cam.extrinsics())}};
}

inline CameraModel load_camera(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open camera file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kValidation, "camera file " + path + ": " + e.what());
  }
  return camera_from_json(j);
}

}  // namespace objflow
