#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

#include "objflow/error.hpp"
#include "objflow/se3geom/camera.hpp"
#include "objflow/se3geom/rigid_transform.hpp"

namespace objflow {

/// height x width, meters.
using DepthMap = Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
/// height x width.
using PixelMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
/// frames x points.
using VisibilityMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Nearest pixel index of a continuous coordinate, clamped into [0, size).
inline int pixel_index(double coord, int size) {
  const long k = std::lround(coord);
  return static_cast<int>(std::clamp<long>(k, 0, size - 1));
}

inline float sample_nearest(const DepthMap& depth, const Eigen::Vector2d& px) {
  return depth(pixel_index(px.y(), static_cast<int>(depth.rows())), pixel_index(px.x(), static_cast<int>(depth.cols())));
}

inline bool sample_nearest(const PixelMask& mask, const Eigen::Vector2d& px) {
  return mask(pixel_index(px.y(), static_cast<int>(mask.rows())), pixel_index(px.x(), static_cast<int>(mask.cols())));
}

/// 2D point tracks c_i^t with visibilities v_i^t.
struct Tracks2D {
  std::vector<Eigen::Matrix2Xd> uv;  // one 2 x n block per frame
  VisibilityMask visible;            // frames x n

  Eigen::Index frames() const { return static_cast<Eigen::Index>(uv.size()); }
  Eigen::Index points() const { return uv.empty() ? 0 : uv.front().cols(); }

  void check_shape() const {
    if (visible.rows() != frames() || visible.cols() != points()) {
      throw Error(ErrorKind::kInvalidArgument, "tracks and visibility shapes disagree");
    }
    for (const auto& f : uv) {
      if (f.cols() != points()) throw Error(ErrorKind::kInvalidArgument, "point count changes across frames");
    }
  }
};

/// Raw ingested inputs for one video.
struct FlowBundle {
  Tracks2D tracks;
  std::vector<DepthMap> depths;  // per frame, up to an affine ambiguity
  DepthMap ref_depth;            // metric depth of the first frame
  PixelMask object_mask;
  std::optional<std::vector<PixelMask>> part_masks;
  CameraModel cam;

  Eigen::Index frames() const { return tracks.frames(); }
  Eigen::Index points() const { return tracks.points(); }

  /// Throws kValidation on the first broken invariant.
  void check() const {
    tracks.check_shape();
    if (frames() == 0 || points() == 0) throw Error(ErrorKind::kValidation, "bundle has no frames or no points");
    if (static_cast<Eigen::Index>(depths.size()) != frames()) {
      throw Error(ErrorKind::kValidation, "depth sequence length differs from track length");
    }
    const auto same_size = [&](Eigen::Index rows, Eigen::Index cols) {
      return rows == ref_depth.rows() && cols == ref_depth.cols();
    };
    if (ref_depth.rows() != cam.height() || ref_depth.cols() != cam.width()) {
      throw Error(ErrorKind::kValidation, "reference depth resolution differs from camera image size");
    }
    for (const auto& d : depths) {
      if (!same_size(d.rows(), d.cols())) throw Error(ErrorKind::kValidation, "depth map resolution mismatch");
    }
    if (!same_size(object_mask.rows(), object_mask.cols())) throw Error(ErrorKind::kValidation, "object mask resolution mismatch");
    if (part_masks) {
      if (static_cast<Eigen::Index>(part_masks->size()) != frames()) {
        throw Error(ErrorKind::kValidation, "part mask count differs from frame count");
      }
      for (const auto& m : *part_masks) {
        if (!same_size(m.rows(), m.cols())) throw Error(ErrorKind::kValidation, "part mask resolution mismatch");
      }
    }
    if (!tracks.visible.row(0).any()) throw Error(ErrorKind::kValidation, "no visible point in the first frame");
    for (Eigen::Index t = 0; t < frames(); ++t) {
      for (Eigen::Index i = 0; i < points(); ++i) {
        if (tracks.visible(t, i) && !cam.in_bounds(tracks.uv[t].col(i))) {
          std::ostringstream os;
          os << "visible track outside image at (t=" << t << ", i=" << i << ")";
          throw Error(ErrorKind::kValidation, os.str());
        }
      }
    }
  }
};

/// Affine depth correction Z = scale * Z_pred + shift.
struct ScaleShift {
  double scale = 1.0;
  double shift = 0.0;  // meters
};

/// Time-indexed robot-frame positions of n tracked points with visibility.
/// Invisible entries hold NaN.
class ObjectFlow3D {
 public:
  ObjectFlow3D() = default;

  ObjectFlow3D(std::vector<PointSet3> positions, VisibilityMask visible)
      : positions_(std::move(positions)), visible_(std::move(visible)) {
    timestamps_.resize(positions_.size());
    for (std::size_t t = 0; t < timestamps_.size(); ++t) timestamps_[t] = static_cast<int>(t);
    check();
  }

  Eigen::Index frames() const { return static_cast<Eigen::Index>(positions_.size()); }
  Eigen::Index points() const { return positions_.empty() ? 0 : positions_.front().cols(); }
  Eigen::Index last() const { return frames() - 1; }

  const PointSet3& positions(Eigen::Index t) const { return positions_.at(static_cast<std::size_t>(t)); }
  const VisibilityMask& visibility() const { return visible_; }
  bool visible(Eigen::Index t, Eigen::Index i) const { return visible_(t, i); }
  const std::vector<int>& timestamps() const { return timestamps_; }

  /// A frame with no visible point is kept (index alignment) but flagged.
  bool empty(Eigen::Index t) const { return !visible_.row(t).any(); }
  bool all_empty() const { return !visible_.any(); }

 private:
  void check() const {
    if (visible_.rows() != frames() || (frames() > 0 && visible_.cols() != points())) {
      throw Error(ErrorKind::kInvalidArgument, "flow positions and visibility shapes disagree");
    }
    for (Eigen::Index t = 0; t < frames(); ++t) {
      if (positions_[t].cols() != points()) throw Error(ErrorKind::kInvalidArgument, "point count changes across frames");
      for (Eigen::Index i = 0; i < points(); ++i) {
        if (visible_(t, i) && !positions_[t].col(i).allFinite()) {
          std::ostringstream os;
          os << "visible flow entry (t=" << t << ", i=" << i << ") is not finite";
          throw Error(ErrorKind::kInvalidArgument, os.str());
        }
      }
    }
  }

  std::vector<PointSet3> positions_;
  VisibilityMask visible_;
  std::vector<int> timestamps_;
};

/// Flow slice at one timestep.
struct FlowSlice {
  PointSet3 points;
  Eigen::Array<bool, Eigen::Dynamic, 1> visible;
};

}  // namespace objflow
