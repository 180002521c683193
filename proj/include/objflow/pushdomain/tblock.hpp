#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

#include "objflow/error.hpp"

namespace objflow::push {

inline constexpr double kPi = 3.14159265358979323846;

/// Wrap to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a > kPi) a -= 2.0 * kPi;
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

inline Eigen::Matrix2d rot2(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  return (Eigen::Matrix2d() << c, -s, s, c).finished();
}

inline double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a.x() * b.y() - a.y() * b.x(); }

/// Planar pose (x, y, theta).
struct Pose2 {
  double x = 0.0, y = 0.0, theta = 0.0;

  Eigen::Vector2d translation() const { return {x, y}; }
  Eigen::Vector2d apply(const Eigen::Vector2d& p) const { return rot2(theta) * p + translation(); }
  Eigen::Matrix2Xd apply(const Eigen::Matrix2Xd& p) const { return (rot2(theta) * p).colwise() + translation(); }
  Eigen::Vector2d to_body(const Eigen::Vector2d& p) const { return rot2(theta).transpose() * (p - translation()); }
};

/// Pose composed with exp of a body twist (vx, vy, omega).
inline Pose2 compose_exp(const Pose2& pose, const Eigen::Vector3d& xi) {
  const double w = xi.z();
  Eigen::Vector2d dt;
  if (std::abs(w) < 1e-12) {
    dt = xi.head<2>();
  } else {
    const double s = std::sin(w) / w, c = (1.0 - std::cos(w)) / w;
    dt = Eigen::Vector2d(s * xi.x() - c * xi.y(), c * xi.x() + s * xi.y());
  }
  const Eigen::Vector2d t = pose.translation() + rot2(pose.theta) * dt;
  return {t.x(), t.y(), wrap_angle(pose.theta + w)};
}

/// T outline: a stem with a crossbar on top, centroid at the body origin.
struct TShape {
  double stem_width = 0.03;
  double stem_height = 0.09;
  double bar_width = 0.09;
  double bar_height = 0.03;

  void check() const {
    if (!(stem_width > 0.0 && stem_height > 0.0 && bar_width > 0.0 && bar_height > 0.0)) {
      throw Error(ErrorKind::kInvalidArgument, "T-block dimensions must be positive");
    }
    if (!(bar_width > stem_width)) throw Error(ErrorKind::kInvalidArgument, "T-block crossbar must be wider than its stem");
  }

  double area() const { return stem_width * stem_height + bar_width * bar_height; }

  /// y coordinate of the stem's bottom edge.
  double bottom() const {
    const double a_stem = stem_width * stem_height, a_bar = bar_width * bar_height;
    return -(a_stem * 0.5 * stem_height + a_bar * (stem_height + 0.5 * bar_height)) / (a_stem + a_bar);
  }

  /// Counter-clockwise outline, 8 vertices.
  Eigen::Matrix2Xd polygon() const {
    const double y0 = bottom(), y1 = y0 + stem_height, y2 = y1 + bar_height;
    const double s = 0.5 * stem_width, b = 0.5 * bar_width;
    Eigen::Matrix2Xd p(2, 8);
    p << -s, s, s, b, b, -b, -b, -s,
         y0, y0, y1, y1, y2, y2, y1, y1;
    return p;
  }
};

struct TBlockState {
  Pose2 pose;
  TShape shape;
  double friction_param = 0.05;  // limit-surface ratio c (m)
};

struct BoundaryPoint {
  Eigen::Vector2d point;
  Eigen::Vector2d inward_normal;
  int edge = -1;
  double edge_param = 0.0;  // 0 at the edge's first vertex, 1 at its second
  double distance = std::numeric_limits<double>::infinity();
};

inline Eigen::Vector2d inward_normal(const Eigen::Matrix2Xd& poly, int edge) {
  const Eigen::Vector2d e = poly.col((edge + 1) % poly.cols()) - poly.col(edge);
  return Eigen::Vector2d(-e.y(), e.x()).normalized();
}

/// Closest point on the outline; ties go to the lower edge index.
inline BoundaryPoint nearest_boundary_point(const Eigen::Matrix2Xd& poly, const Eigen::Vector2d& q) {
  BoundaryPoint best;
  for (int k = 0; k < poly.cols(); ++k) {
    const Eigen::Vector2d a = poly.col(k), b = poly.col((k + 1) % poly.cols());
    const Eigen::Vector2d e = b - a;
    const double t = std::clamp((q - a).dot(e) / e.squaredNorm(), 0.0, 1.0);
    const Eigen::Vector2d p = a + t * e;
    const double d = (q - p).norm();
    if (d < best.distance) best = {p, inward_normal(poly, k), k, t, d};
  }
  return best;
}

/// Crossing-number test; boundary points may go either way.
inline bool point_in_polygon(const Eigen::Matrix2Xd& poly, const Eigen::Vector2d& q) {
  bool inside = false;
  for (Eigen::Index k = 0, j = poly.cols() - 1; k < poly.cols(); j = k++) {
    const Eigen::Vector2d a = poly.col(k), b = poly.col(j);
    if ((a.y() > q.y()) != (b.y() > q.y()) && q.x() < (b.x() - a.x()) * (q.y() - a.y()) / (b.y() - a.y()) + a.x()) {
      inside = !inside;
    }
  }
  return inside;
}

struct RayHit {
  double s = std::numeric_limits<double>::infinity();  // distance along the ray
  int edge = -1;
  bool hit() const { return edge >= 0; }
};

/// First entering crossing of q + s u, s in [0, max_s], with the outline.
inline RayHit first_entry(const Eigen::Matrix2Xd& poly, const Eigen::Vector2d& q, const Eigen::Vector2d& u, double max_s) {
  RayHit best;
  for (int k = 0; k < poly.cols(); ++k) {
    if (inward_normal(poly, k).dot(u) <= 0.0) continue;
    const Eigen::Vector2d a = poly.col(k), e = poly.col((k + 1) % poly.cols()) - a;
    const double den = cross2(u, e);
    if (std::abs(den) < 1e-15) continue;
    const Eigen::Vector2d aq = a - q;
    const double s = cross2(aq, e) / den, t = cross2(aq, u) / den;
    if (t < -1e-12 || t > 1.0 + 1e-12 || s < -1e-12 || s > max_s) continue;
    if (s < best.s) best = {std::max(s, 0.0), k};
  }
  return best;
}

/// Cell-centred grid samples inside the block (body frame).
inline Eigen::Matrix2Xd block_particles(const TShape& shape, double spacing = 0.01) {
  shape.check();
  const double y0 = shape.bottom(), y1 = y0 + shape.stem_height;
  std::vector<Eigen::Vector2d> pts;
  const auto fill = [&](double x_lo, double x_hi, double y_lo, double y_hi) {
    const int nx = std::max(1, static_cast<int>(std::round((x_hi - x_lo) / spacing)));
    const int ny = std::max(1, static_cast<int>(std::round((y_hi - y_lo) / spacing)));
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        pts.emplace_back(x_lo + (i + 0.5) * (x_hi - x_lo) / nx, y_lo + (j + 0.5) * (y_hi - y_lo) / ny);
      }
    }
  };
  fill(-0.5 * shape.stem_width, 0.5 * shape.stem_width, y0, y1);
  fill(-0.5 * shape.bar_width, 0.5 * shape.bar_width, y1, y1 + shape.bar_height);
  Eigen::Matrix2Xd out(2, static_cast<Eigen::Index>(pts.size()));
  for (std::size_t k = 0; k < pts.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = pts[k];
  return out;
}

/// Least-squares planar rigid fit dst ~ pose.apply(src).
inline Pose2 fit_pose2(const Eigen::Matrix2Xd& src, const Eigen::Matrix2Xd& dst) {
  if (src.cols() != dst.cols() || src.cols() < 2) throw Error(ErrorKind::kDegenerateCorrespondence, "planar fit needs 2+ pairs");
  const Eigen::Vector2d ms = src.rowwise().mean(), md = dst.rowwise().mean();
  double sc = 0.0, sd = 0.0;
  for (Eigen::Index i = 0; i < src.cols(); ++i) {
    const Eigen::Vector2d a = src.col(i) - ms, b = dst.col(i) - md;
    sd += a.dot(b);
    sc += cross2(a, b);
  }
  if (std::hypot(sc, sd) < 1e-18) throw Error(ErrorKind::kDegenerateGeometry, "planar fit: coincident points");
  const double theta = std::atan2(sc, sd);
  const Eigen::Vector2d t = md - rot2(theta) * ms;
  return {t.x(), t.y(), theta};
}

}  // namespace objflow::push
