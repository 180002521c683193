#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>

#include "objflow/pushdomain/tblock.hpp"

namespace objflow::push {

/// Point pusher moving `distance` along `direction` from `start` (world frame).
struct PushParams {
  Eigen::Vector2d start = Eigen::Vector2d::Zero();
  Eigen::Vector2d direction = Eigen::Vector2d::UnitX();
  double distance = 0.0;

  void check(double d_max = std::numeric_limits<double>::infinity()) const {
    if (!start.allFinite() || !direction.allFinite()) throw Error(ErrorKind::kInvalidArgument, "push has non-finite values");
    if (std::abs(direction.norm() - 1.0) > 1e-9) throw Error(ErrorKind::kInvalidArgument, "push direction must be a unit vector");
    if (!(distance >= 0.0) || distance > d_max) throw Error(ErrorKind::kInvalidArgument, "push distance out of range");
  }
};

struct SimOptions {
  double step = 0.002;        // pusher increment (m), at most 5 mm
  double pusher_friction = 0.3;
};

struct PushResult {
  TBlockState state;
  bool contact = false;
  double contact_travel = 0.0;  // pusher distance covered while touching the block
};

/// Body twist per unit pusher travel for a point contact at `r` with inward
/// normal `n`, pusher velocity `v` (body frame), under the ellipsoidal limit
/// surface with ratio c. Sticking when the required force lies inside the
/// friction cone, otherwise sliding along the nearer cone edge. Empty when the
/// pusher moves away from the edge.
inline std::optional<Eigen::Vector3d> contact_twist(const Eigen::Vector2d& r, const Eigen::Vector2d& n,
                                                    const Eigen::Vector2d& v, double c, double mu) {
  const double vn = n.dot(v);
  if (vn <= 0.0) return std::nullopt;
  const Eigen::Vector2d w(-r.y(), r.x());
  const Eigen::Matrix2d a = Eigen::Matrix2d::Identity() + w * w.transpose() / (c * c);
  Eigen::Vector2d f = a.ldlt().solve(v);
  const double fn = n.dot(f), ft = cross2(n, f);
  if (!(fn > 0.0 && std::abs(ft) <= mu * fn)) {
    const Eigen::Vector2d edge = rot2(ft >= 0.0 ? std::atan(mu) : -std::atan(mu)) * n;
    const double den = n.dot(a * edge);
    if (den > 1e-12) f = (vn / den) * edge;
  }
  return Eigen::Vector3d(f.x(), f.y(), w.dot(f) / (c * c));
}

inline bool push_contacts(const TBlockState& s, const PushParams& p) {
  const Eigen::Matrix2Xd poly = s.shape.polygon();
  const Eigen::Vector2d q = s.pose.to_body(p.start);
  if (point_in_polygon(poly, q)) return false;
  const RayHit hit = first_entry(poly, q, rot2(s.pose.theta).transpose() * p.direction, p.distance);
  return hit.hit() && hit.s < p.distance;
}

/// Quasi-static pushing of the T-block by a point pusher. The pusher advances
/// in increments of `step`; while touching, each increment moves the block by
/// a midpoint (RK2) step of the limit-surface twist, shortened near contact
/// events. Contact ends when the pusher slides past a vertex or moves away
/// from the edge. A push that never
/// reaches the block leaves it unchanged with contact = false.
inline PushResult simulate_push(const TBlockState& s, const PushParams& p, const SimOptions& opts = {}) {
  p.check();
  if (!(opts.step > 0.0 && opts.step <= 0.005)) throw Error(ErrorKind::kInvalidArgument, "push step must be in (0, 5 mm]");
  s.shape.check();
  const Eigen::Matrix2Xd poly = s.shape.polygon();
  const double c = s.friction_param, mu = opts.pusher_friction;
  if (point_in_polygon(poly, s.pose.to_body(p.start))) throw Error(ErrorKind::kInvalidArgument, "push starts inside the block");

  PushResult out{s, false, 0.0};
  Pose2& pose = out.state.pose;
  Eigen::Vector2d pusher = p.start;
  const Eigen::Vector2d u = p.direction;
  double remaining = p.distance;
  const auto body_u = [&](const Pose2& x) -> Eigen::Vector2d { return rot2(x.theta).transpose() * u; };
  const auto twist_at = [&](const Pose2& x, const Eigen::Vector2d& pw) {
    const BoundaryPoint b = nearest_boundary_point(poly, x.to_body(pw));
    return contact_twist(b.point, b.inward_normal, body_u(x), c, mu);
  };

  int edge = -1;
  while (remaining > 1e-12) {
    double h = std::min(opts.step, remaining);
    if (edge < 0) {
      const RayHit hit = first_entry(poly, pose.to_body(pusher), body_u(pose), h);
      if (!hit.hit() || hit.s >= remaining) {
        pusher += h * u;
        remaining -= h;
        continue;
      }
      pusher += hit.s * u;
      remaining -= hit.s;
      edge = hit.edge;
      out.contact = true;
      continue;
    }
    const auto xi1 = twist_at(pose, pusher);
    if (!xi1) {
      edge = -1;
      pusher += h * u;
      remaining -= h;
      continue;
    }
    // Halve the increment until it no longer crosses a contact event (edge
    // change or slipping off a vertex), so events land within kEventTol.
    constexpr double kEventTol = 1e-7;
    while (true) {
      const Pose2 mid = compose_exp(pose, 0.5 * h * *xi1);
      const Eigen::Vector3d xi2 = twist_at(mid, pusher + 0.5 * h * u).value_or(*xi1);
      Pose2 next = compose_exp(pose, h * xi2);
      const Eigen::Vector2d next_pusher = pusher + h * u;
      const Eigen::Vector2d q = next.to_body(next_pusher);
      const BoundaryPoint b = nearest_boundary_point(poly, q);
      const bool at_vertex = b.edge_param <= 0.0 || b.edge_param >= 1.0;
      const bool lost = !point_in_polygon(poly, q) && at_vertex && b.distance > 1e-9;
      if ((lost || b.edge != edge) && h > kEventTol) {
        h *= 0.5;
        continue;
      }
      if (!lost) {
        // Keep the pusher on the outline.
        const Eigen::Vector2d shift = next_pusher - next.apply(b.point);
        next.x += shift.x();
        next.y += shift.y();
      }
      pose = next;
      pusher = next_pusher;
      remaining -= h;
      out.contact_travel += h;
      edge = lost ? -1 : b.edge;
      break;
    }
  }
  return out;
}

}  // namespace objflow::push
