#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "objflow/depthflow/matching.hpp"
#include "objflow/depthflow/types.hpp"
#include "objflow/pushdomain/simulate.hpp"
#include "objflow/seed.hpp"

namespace objflow::push {

struct PushSampling {
  double d_min = 0.01;
  double d_max = 0.08;
  double clearance = 0.005;                 // start offset behind the contact point (m)
  double max_angle = 60.0 * kPi / 180.0;    // around the inward normal
};

/// `count` contacting pushes: a boundary point drawn uniformly by arc length,
/// a direction within max_angle of the inward normal, a start `clearance`
/// behind the boundary point and d ~ U[d_min, d_max]. Candidates that start
/// inside the block or miss it are redrawn.
inline std::vector<PushParams> sample_pushes(const TBlockState& s, std::uint64_t seed, int count,
                                             const PushSampling& cfg = {}) {
  if (count < 1) throw Error(ErrorKind::kInvalidArgument, "sample_pushes: count must be >= 1");
  if (!(cfg.d_min > cfg.clearance && cfg.d_max >= cfg.d_min)) {
    throw Error(ErrorKind::kInvalidArgument, "sample_pushes: need clearance < d_min <= d_max");
  }
  const Eigen::Matrix2Xd poly = s.shape.polygon();
  const Eigen::Index m = poly.cols();
  Eigen::VectorXd cum(m + 1);
  cum[0] = 0.0;
  for (Eigen::Index k = 0; k < m; ++k) cum[k + 1] = cum[k] + (poly.col((k + 1) % m) - poly.col(k)).norm();

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> along(0.0, cum[m]), angle(-cfg.max_angle, cfg.max_angle),
      dist(cfg.d_min, cfg.d_max);
  const Eigen::Matrix2d r = rot2(s.pose.theta);
  std::vector<PushParams> out;
  while (static_cast<int>(out.size()) < count) {
    const double a = along(rng), ang = angle(rng), d = dist(rng);
    Eigen::Index k = 0;
    while (k + 1 < m && cum[k + 1] <= a) ++k;
    const Eigen::Vector2d p0 = poly.col(k), p1 = poly.col((k + 1) % m);
    const Eigen::Vector2d b = p0 + (a - cum[k]) / (cum[k + 1] - cum[k]) * (p1 - p0);
    const Eigen::Vector2d dir_body = rot2(ang) * inward_normal(poly, static_cast<int>(k));
    PushParams push{s.pose.apply(Eigen::Vector2d(b - cfg.clearance * dir_body)), (r * dir_body).normalized(), d};
    if (push_contacts(s, push)) out.push_back(push);
  }
  return out;
}

/// Translation-only prediction: every point moves by d * direction when the
/// push reaches the block.
inline Eigen::Matrix2Xd heuristic_dynamics(const Eigen::Matrix2Xd& points, const PushParams& p, bool contacts) {
  p.check();
  if (!contacts) return points;
  return points.colwise() + p.distance * p.direction;
}

inline Eigen::Matrix2Xd heuristic_dynamics(const TBlockState& s, const Eigen::Matrix2Xd& points, const PushParams& p) {
  return heuristic_dynamics(points, p, push_contacts(s, p));
}

/// Index of the nearest scene particle for every tracked particle (2D);
/// ties go to the lowest scene index.
inline std::vector<Eigen::Index> match_particles(const Eigen::Matrix2Xd& tracked, const Eigen::Matrix2Xd& scene) {
  if (scene.cols() == 0) throw Error(ErrorKind::kMatchingFailure, "no scene particles to match");
  std::vector<Eigen::Index> out(static_cast<std::size_t>(tracked.cols()));
  for (Eigen::Index i = 0; i < tracked.cols(); ++i) {
    Eigen::Index best = 0;
    (scene.colwise() - tracked.col(i)).colwise().squaredNorm().minCoeff(&best);
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

struct SuccessTolerance {
  double translation = 0.02;
  double rotation = 15.0 * kPi / 180.0;
};

inline bool check_success(const Pose2& pose, const Pose2& goal, const SuccessTolerance& tol = {}) {
  return std::hypot(pose.x - goal.x, pose.y - goal.y) <= tol.translation &&
         std::abs(wrap_angle(pose.theta - goal.theta)) <= tol.rotation;
}

inline bool check_success(const TBlockState& s, const TBlockState& goal, const SuccessTolerance& tol = {}) {
  return check_success(s.pose, goal.pose, tol);
}

enum class Dynamics { kOracle, kHeuristic };

inline std::string_view to_string(Dynamics d) { return d == Dynamics::kOracle ? "oracle" : "heuristic"; }

inline Dynamics parse_dynamics(std::string_view s) {
  if (s == "oracle") return Dynamics::kOracle;
  if (s == "heuristic") return Dynamics::kHeuristic;
  throw Error(ErrorKind::kInvalidArgument, "dynamics must be oracle or heuristic, got '" + std::string(s) + "'");
}

struct EpisodeConfig {
  int samples = 64;   // r
  int lookahead = kDefaultLookahead;
  int max_pushes = 20;
  SuccessTolerance tol;
  PushSampling sampling;
  SimOptions sim;
  double particle_spacing = 0.01;
  std::uint64_t seed = 0;
};

struct PushRecord {
  PushParams push;
  double predicted_cost = 0.0;
  Pose2 pose;  // block pose after execution
  Eigen::Index t_star = 0;
  Eigen::Index subgoal = 0;
  bool contact = false;
};

struct EpisodeLog {
  Pose2 start;
  Pose2 goal;
  std::vector<PushRecord> pushes;
  Pose2 final_pose;
  bool success = false;
};

/// Flow of body particles carried by each pose (z = 0).
inline ObjectFlow3D planar_flow(const Eigen::Matrix2Xd& body, const std::vector<Pose2>& poses) {
  std::vector<PointSet3> frames;
  for (const Pose2& p : poses) {
    PointSet3 f = PointSet3::Zero(3, body.cols());
    f.topRows(2) = p.apply(body);
    frames.push_back(std::move(f));
  }
  return {std::move(frames), VisibilityMask::Constant(static_cast<Eigen::Index>(poses.size()), body.cols(), true)};
}

/// Constant-rate pose interpolation (shortest rotation), `frames` >= 2.
inline std::vector<Pose2> interpolate_poses(const Pose2& a, const Pose2& b, int frames) {
  if (frames < 2) throw Error(ErrorKind::kInvalidArgument, "interpolate_poses needs 2+ frames");
  const double dtheta = wrap_angle(b.theta - a.theta);
  std::vector<Pose2> out;
  for (int k = 0; k < frames; ++k) {
    const double s = double(k) / (frames - 1);
    out.push_back({a.x + s * (b.x - a.x), a.y + s * (b.y - a.y), wrap_angle(a.theta + s * dtheta)});
  }
  return out;
}

/// Random-shooting push planner with replanning after every push. Flow points
/// are matched to the block's particles at the start pose; the goal is the
/// planar fit of those particles to the last flow frame. Each round finds the
/// nearest flow timestep, targets the frame `lookahead` ahead, scores `samples`
/// contacting pushes by predicted squared particle error under `dynamics`, and
/// executes the best one in the simulator.
inline EpisodeLog plan_push_episode(const TBlockState& start, const ObjectFlow3D& flow, Dynamics dynamics,
                                    const EpisodeConfig& cfg = {}) {
  if (flow.frames() == 0 || flow.points() == 0 || flow.empty(0) || flow.empty(flow.last())) {
    throw Error(ErrorKind::kPlanningFailure, "flow has no particles visible in its first and last frames");
  }
  const Eigen::Matrix2Xd body = block_particles(start.shape, cfg.particle_spacing);

  // Tracked flow particles -> block particles.
  std::vector<Eigen::Index> tracked;
  for (Eigen::Index i = 0; i < flow.points(); ++i)
    if (flow.visible(0, i)) tracked.push_back(i);
  Eigen::Matrix2Xd first(2, static_cast<Eigen::Index>(tracked.size()));
  for (std::size_t k = 0; k < tracked.size(); ++k) first.col(static_cast<Eigen::Index>(k)) = flow.positions(0).col(tracked[k]).head<2>();
  const std::vector<Eigen::Index> match = match_particles(first, start.pose.apply(body));
  Eigen::Matrix2Xd matched_body(2, first.cols());
  for (Eigen::Index k = 0; k < first.cols(); ++k) matched_body.col(k) = body.col(match[static_cast<std::size_t>(k)]);
  ObjectFlow3D sub = subset_points(flow, tracked);
  {
    std::vector<PointSet3> flat;
    for (Eigen::Index t = 0; t < sub.frames(); ++t) {
      PointSet3 f = sub.positions(t);
      f.row(2).setZero();
      flat.push_back(std::move(f));
    }
    sub = ObjectFlow3D(std::move(flat), sub.visibility());
  }

  std::vector<Eigen::Index> goal_idx;
  for (Eigen::Index k = 0; k < sub.points(); ++k)
    if (sub.visible(sub.last(), k)) goal_idx.push_back(k);
  Eigen::Matrix2Xd gsrc(2, static_cast<Eigen::Index>(goal_idx.size())), gdst(2, static_cast<Eigen::Index>(goal_idx.size()));
  for (std::size_t k = 0; k < goal_idx.size(); ++k) {
    gsrc.col(static_cast<Eigen::Index>(k)) = matched_body.col(goal_idx[k]);
    gdst.col(static_cast<Eigen::Index>(k)) = sub.positions(sub.last()).col(goal_idx[k]).head<2>();
  }

  EpisodeLog log;
  log.start = start.pose;
  log.goal = fit_pose2(gsrc, gdst);
  TBlockState state = start;
  const auto lift = [](const Eigen::Matrix2Xd& p) {
    PointSet3 out = PointSet3::Zero(3, p.cols());
    out.topRows(2) = p;
    return out;
  };

  for (int k = 0;; ++k) {
    if (check_success(state.pose, log.goal, cfg.tol)) {
      log.success = true;
      break;
    }
    if (k >= cfg.max_pushes) break;
    const Eigen::Matrix2Xd current = state.pose.apply(matched_body);
    const Eigen::Index t_star = nearest_timestep(lift(current), sub);
    const FlowSlice target = select_subgoal(t_star, sub, cfg.lookahead);
    const auto cost_of = [&](const Eigen::Matrix2Xd& predicted) {
      double c = 0.0;
      for (Eigen::Index i = 0; i < predicted.cols(); ++i)
        if (target.visible[i]) c += (predicted.col(i) - target.points.col(i).head<2>()).squaredNorm();
      return c;
    };

    const std::vector<PushParams> candidates = sample_pushes(state, derive_seed(cfg.seed, "pusht", k), cfg.samples, cfg.sampling);
    std::size_t best = 0;
    double best_cost = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < candidates.size(); ++j) {
      const Eigen::Matrix2Xd predicted =
          dynamics == Dynamics::kOracle ? simulate_push(state, candidates[j], cfg.sim).state.pose.apply(matched_body)
                                        : heuristic_dynamics(current, candidates[j], true);
      const double c = cost_of(predicted);
      if (c < best_cost) {
        best_cost = c;
        best = j;
      }
    }
    const PushResult r = simulate_push(state, candidates[best], cfg.sim);
    state = r.state;
    log.pushes.push_back({candidates[best], best_cost, state.pose, t_star, subgoal_index(t_star, sub.last(), cfg.lookahead), r.contact});
  }
  log.final_pose = state.pose;
  return log;
}

}  // namespace objflow::push
