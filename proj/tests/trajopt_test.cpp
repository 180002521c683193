#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "objflow/synthetic.hpp"
#include "objflow/trajopt/grasp.hpp"
#include "objflow/trajopt/io.hpp"
#include "objflow/trajopt/optimizer.hpp"
#include "objflow/trajopt/rollout.hpp"

namespace objflow {
namespace {

constexpr double kPi = 3.14159265358979323846;

GraspCandidate at(double x, double y, double z) { return {RigidTransform::from_translation({x, y, z}), 0.5}; }

ThumbTrajectory thumb_frames(int frames) {
  return {Eigen::Matrix3Xd::Zero(3, frames), Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(frames, false)};
}

TEST(SelectGrasp, EarliestThumbFrameWins) {
  const std::vector<GraspCandidate> c{at(0.5, 0.0, 0.1), at(0.3, 0.2, 0.1)};
  ThumbTrajectory thumb = thumb_frames(12);
  thumb.positions.col(3) = Eigen::Vector3d(0.5, 0.0, 0.1);
  thumb.detected[3] = true;
  thumb.positions.col(9) = Eigen::Vector3d(0.3, 0.21, 0.1);
  thumb.detected[9] = true;
  const auto s = select_grasp(c, thumb, PointSet3::Zero(3, 1));
  EXPECT_EQ(s.index, 0u);
  EXPECT_EQ(s.reason, GraspReason::kThumbProximity);
  EXPECT_EQ(s.frame, 3);
}

TEST(SelectGrasp, FallsBackToMovableCentroid) {
  const std::vector<GraspCandidate> c{at(0.5, 0.0, 0.1), at(0.3, 0.2, 0.1), at(0.0, -0.3, 0.1)};
  ThumbTrajectory thumb = thumb_frames(4);
  thumb.positions.col(1) = Eigen::Vector3d(0.5, 0.05, 0.1);  // 5 cm away
  thumb.detected[1] = true;
  PointSet3 movable(3, 2);
  movable << 0.0, 0.02, -0.28, -0.34, 0.1, 0.1;
  const auto s = select_grasp(c, thumb, movable);
  EXPECT_EQ(s.index, 2u);
  EXPECT_STREQ(to_string(s.reason), "movable-centroid");
}

TEST(SelectGrasp, ClosestWithinRadiusAtSameFrame) {
  const std::vector<GraspCandidate> c{at(0.012, 0.0, 0.0), at(0.0, 0.005, 0.0)};
  ThumbTrajectory thumb = thumb_frames(1);
  thumb.detected[0] = true;
  // Reference: exhaustive distance comparison.
  std::size_t want = 0;
  for (std::size_t k = 1; k < c.size(); ++k)
    if (c[k].pose.translation().norm() < c[want].pose.translation().norm()) want = k;
  EXPECT_EQ(select_grasp(c, thumb, PointSet3::Zero(3, 1)).index, want);
  EXPECT_EQ(want, 1u);
}

TEST(SelectGrasp, EmptyCandidatesRaise) {
  try {
    select_grasp({}, thumb_frames(1), PointSet3::Zero(3, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNoGrasp);
  }
}

TEST(Rollout, ConstantPoseKeepsPoints) {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> u(-1, 1);
  const PointSet3 p0 = PointSet3::NullaryExpr(3, 6, [&] { return u(rng); });
  const RigidTransform grasp = RigidTransform::from_axis_angle(Eigen::Vector3d::UnitY(), 0.4, {0.2, 0.1, 0.3});
  for (const auto& p : rigid_grasp_rollout(grasp, {grasp, grasp, grasp}, p0, {0, 2, 4})) {
    EXPECT_LT((p - p0).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(Rollout, TranslationAndRotation) {
  std::mt19937_64 rng(52);
  std::uniform_real_distribution<double> u(-1, 1);
  const PointSet3 p0 = PointSet3::NullaryExpr(3, 6, [&] { return u(rng); });
  const RigidTransform grasp = RigidTransform::from_axis_angle(Eigen::Vector3d::UnitZ(), 0.3, {0.5, 0.0, 0.2});
  const std::vector<Eigen::Index> grasped{1, 3};
  const RigidTransform shifted = RigidTransform::from_translation({0.1, 0, 0}) * grasp;
  const RigidTransform spun = grasp * RigidTransform::from_axis_angle(Eigen::Vector3d::UnitX(), kPi / 2);
  const auto frames = rigid_grasp_rollout(grasp, {shifted, spun}, p0, grasped);
  for (Eigen::Index i = 0; i < 6; ++i) {
    const bool g = i == 1 || i == 3;
    const Eigen::Vector3d want_shift = p0.col(i) + (g ? Eigen::Vector3d(0.1, 0, 0) : Eigen::Vector3d::Zero());
    EXPECT_LT((frames[0].col(i) - want_shift).norm(), 1e-14);
    // Rotation about the gripper origin: express in the gripper frame, rotate, map back.
    const Eigen::Vector3d local = grasp.inverse() * Eigen::Vector3d(p0.col(i));
    const Eigen::Vector3d want_spin = g ? Eigen::Vector3d(grasp * (Eigen::AngleAxisd(kPi / 2, Eigen::Vector3d::UnitX()) * local))
                                        : Eigen::Vector3d(p0.col(i));
    EXPECT_LT((frames[1].col(i) - want_spin).norm(), 1e-14);
  }
}

TEST(BlockTridiagonal, MatchesDenseSolve) {
  std::mt19937_64 rng(53);
  std::normal_distribution<double> n(0.0, 1.0);
  const int blocks = 6, d = 3;
  const auto rnd = [&] { return Eigen::MatrixXd(Eigen::MatrixXd::NullaryExpr(d, d, [&] { return n(rng); })); };
  BlockTridiagonal bt(blocks, d);
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(blocks * d, blocks * d);
  for (int t = 0; t < blocks; ++t) {
    const Eigen::MatrixXd m = rnd();
    bt.diag[t] = m * m.transpose() + 8.0 * Eigen::MatrixXd::Identity(d, d);
    dense.block(t * d, t * d, d, d) = bt.diag[t];
    if (t > 0) {
      bt.lower[t] = rnd();
      dense.block(t * d, (t - 1) * d, d, d) = bt.lower[t];
      dense.block((t - 1) * d, t * d, d, d) = bt.lower[t].transpose();
    }
  }
  const Eigen::VectorXd b = Eigen::VectorXd::NullaryExpr(blocks * d, [&] { return n(rng); });
  Eigen::VectorXd x;
  ASSERT_TRUE(bt.solve(0.5, b, x));
  const Eigen::VectorXd ref = (dense + 0.5 * Eigen::MatrixXd::Identity(blocks * d, blocks * d)).ldlt().solve(b);
  EXPECT_LT((x - ref).cwiseAbs().maxCoeff(), 1e-10);
}

synth::GraspFixture small_fixture(std::uint64_t seed, int frames = 15) {
  synth::GraspFixtureOptions opts;
  opts.frames = frames;
  opts.grasped = 30;
  opts.fixed = 6;
  const RobotModel m = panda_like_arm();
  Eigen::VectorXd q0(7);
  q0 << 0.0, -0.3, 0.0, -2.0, 0.0, 1.8, 0.8;
  return synth::make_grasp_fixture(m, q0, seed, opts);
}

TEST(CostWeights, Defaults) {
  const CostWeights w;
  EXPECT_EQ(w.task, 10.0);
  EXPECT_EQ(w.reachability, 100.0);
  EXPECT_EQ(w.smoothness, 1.0);
  EXPECT_EQ(w.manipulability, 0.01);
  EXPECT_THROW(parse_weights("1,2,3"), Error);
  EXPECT_THROW(parse_weights("1,2,-3,4"), Error);
  const CostWeights p = parse_weights("1,2,3,4");
  EXPECT_EQ(p.manipulability, 4.0);
}

TEST(FlowTrackingProblem, GradientMatchesFiniteDifferences) {
  const auto fx = small_fixture(54, 8);
  const FlowTrackingProblem prob(fx.model, fx.flow, fx.grasp, fx.grasped, {}, 8);
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  Eigen::VectorXd base(prob.size());
  for (int t = 0; t < 8; ++t) base.segment(t * 7, 7) = fx.q.row(t).transpose();
  for (int k = 0; k < 20; ++k) {
    Eigen::VectorXd x = base + Eigen::VectorXd::NullaryExpr(prob.size(), [&] { return u(rng); });
    if (k % 5 == 0) x[3] = fx.model.joint(3).upper + 0.05;  // exercise the limit hinge
    BlockTridiagonal h(8, 7);
    Eigen::VectorXd g;
    const double c = prob.linearize(x, &h, &g);
    EXPECT_NEAR(c, prob.cost(x), 1e-10 * std::max(1.0, std::abs(c)));
    Eigen::VectorXd fd(prob.size());
    for (Eigen::Index j = 0; j < prob.size(); ++j) {
      Eigen::VectorXd xp = x, xm = x;
      xp[j] += 1e-6;
      xm[j] -= 1e-6;
      fd[j] = (prob.cost(xp) - prob.cost(xm)) / 2e-6;
    }
    EXPECT_LE((g - fd).cwiseAbs().maxCoeff() / fd.cwiseAbs().maxCoeff(), 1e-4) << "iterate " << k;
  }
}

TEST(Optimize, RoundTripRecoversFlow) {
  const auto fx = small_fixture(56);
  std::mt19937_64 rng(57);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  Eigen::VectorXd seed(fx.q.size());
  for (Eigen::Index t = 0; t < fx.q.rows(); ++t)
    for (int j = 0; j < 7; ++j) seed[t * 7 + j] = fx.q(t, j) + u(rng);
  const auto res = optimize_trajectory(fx.model, fx.flow, fx.grasp, fx.grasped, {}, seed, static_cast<int>(fx.q.rows()));
  EXPECT_LT(res.costs.task, 1e-6) << res.stop_reason;
  for (std::size_t k = 1; k < res.cost_history.size(); ++k) EXPECT_LE(res.cost_history[k], res.cost_history[k - 1]);
  const auto pred = rigid_grasp_rollout(fx.grasp, res.ee_poses, fx.points0, fx.grasped);
  double sq = 0.0;
  for (Eigen::Index i : fx.grasped) sq += (pred.back().col(i) - fx.flow.positions(fx.flow.last()).col(i)).squaredNorm();
  EXPECT_LT(std::sqrt(sq / static_cast<double>(fx.grasped.size())), 0.01);
}

TEST(Optimize, StaticFlowStaysStill) {
  const auto fx = small_fixture(58, 2);
  std::vector<PointSet3> still(10, fx.points0);
  const ObjectFlow3D flow = rollout_flow(still);
  const Eigen::VectorXd q0 = fx.q.row(0).transpose();
  const auto res = optimize_trajectory(fx.model, flow, fx.grasp, fx.grasped, {}, q0, 10);
  EXPECT_LT(res.costs.task, 1e-6);
  for (Eigen::Index t = 1; t < 10; ++t) {
    EXPECT_LT((res.trajectory.configurations.row(t) - res.trajectory.configurations.row(0)).cwiseAbs().maxCoeff(), 1e-3);
  }
}

TEST(Optimize, Errors) {
  const auto fx = small_fixture(59, 4);
  VisibilityMask none = VisibilityMask::Constant(4, fx.flow.points(), false);
  std::vector<PointSet3> pos;
  for (int t = 0; t < 4; ++t) pos.push_back(fx.flow.positions(t));
  try {
    FlowTrackingProblem(fx.model, ObjectFlow3D(pos, none), fx.grasp, fx.grasped, {}, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNoTarget);
  }
  EXPECT_THROW(FlowTrackingProblem(fx.model, fx.flow, fx.grasp, fx.grasped, {}, 1), Error);
  EXPECT_THROW(FlowTrackingProblem(fx.model, fx.flow, fx.grasp, {}, {}, 4), Error);
}

// Property: hiding half the flow entries barely moves the recovered final pose.
TEST(Optimize, OcclusionRobustness) {
  const auto fx = small_fixture(60);
  const int h = static_cast<int>(fx.q.rows());
  const Eigen::VectorXd seed = fx.q.row(0).transpose();
  const auto full = optimize_trajectory(fx.model, fx.flow, fx.grasp, fx.grasped, {}, seed, h);
  std::mt19937_64 rng(61);
  std::bernoulli_distribution hide(0.5);
  VisibilityMask vis = fx.flow.visibility();
  for (Eigen::Index t = 1; t < vis.rows(); ++t)
    for (Eigen::Index i = 0; i < vis.cols(); ++i) vis(t, i) = !hide(rng);
  std::vector<PointSet3> pos;
  for (Eigen::Index t = 0; t < fx.flow.frames(); ++t) pos.push_back(fx.flow.positions(t));
  const auto masked = optimize_trajectory(fx.model, ObjectFlow3D(pos, vis), fx.grasp, fx.grasped, {}, seed, h);
  EXPECT_LT((masked.ee_poses.back().translation() - full.ee_poses.back().translation()).norm(), 0.02);
}

}  // namespace
}  // namespace objflow
