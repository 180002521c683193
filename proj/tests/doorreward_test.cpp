#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "objflow/doorreward/reward.hpp"

namespace objflow::door {
namespace {

DoorState placed_door() {
  DoorState s;
  s.frame = RigidTransform::from_axis_angle(Eigen::Vector3d::UnitZ(), 0.3, {0.5, 0.2, 0.8});
  s.ee = s.frame * Eigen::Vector3d(0.1, 0.3, 0.2);
  return s;
}

FlowRewardContext linear_context(int frames, double final_angle = 0.5) {
  return FlowRewardContext(hinge_flow(panel_particles(DoorGeometry{}), final_angle, frames));
}

TEST(StateReward, ReachingAtHandle) {
  DoorState s = placed_door();
  s.ee = s.handle_position();
  const StateReward r = object_state_reward(s);
  EXPECT_NEAR(r.total, 0.25, 1e-12);
  EXPECT_FALSE(r.completed);
}

TEST(StateReward, RotationClipsAtQuarter) {
  DoorState s = placed_door();
  s.ee = Eigen::Vector3d(1e6, 0.0, 0.0);
  s.handle_angle = 0.5 * kPi;
  EXPECT_NEAR(object_state_reward(s).rotation, 0.25, 1e-12);
  EXPECT_NEAR(object_state_reward(s).total, 0.25, 1e-9);
  s.handle_angle = -3.0;  // beyond the range the clip guards
  EXPECT_EQ(object_state_reward(s).rotation, 0.25);
  s.handle_angle = 0.25 * kPi;
  EXPECT_NEAR(object_state_reward(s).rotation, 0.125, 1e-12);
}

TEST(StateReward, CompletionAboveThreshold) {
  DoorState s = placed_door();
  s.hinge_angle = 0.35;
  EXPECT_EQ(object_state_reward(s).total, 1.0);
  s.hinge_angle = 0.3;  // strictly greater is required
  EXPECT_LT(object_state_reward(s).total, 0.5);
}

TEST(StateReward, CompletionImpliesEpisodeSuccess) { EXPECT_GE(kCompletionAngle, kSuccessAngle); }

// Property: r_reach strictly decreases with the gripper-handle distance.
TEST(StateReward, ReachDecreasesWithDistance) {
  DoorState s = placed_door();
  const Eigen::Vector3d h = s.handle_position();
  const Eigen::Vector3d dir = Eigen::Vector3d(1.0, -2.0, 0.5).normalized();
  double prev = 1.0;
  for (int k = 0; k < 100; ++k) {
    s.ee = h + 0.01 * k * dir;
    const double r = object_state_reward(s).reach;
    EXPECT_LT(r, prev);
    prev = r;
  }
}

TEST(FlowReward, EndpointWithEeAtMean) {
  const FlowRewardContext ctx = linear_context(60);
  DoorState s = placed_door();
  s.hinge_angle = 0.5;
  const Eigen::Vector3d mean = s.particles(ctx.particle_template()).rowwise().mean();
  s.ee = s.frame * mean;
  const FlowReward r = flow_reward(s, ctx);
  EXPECT_EQ(r.t_star, 60);
  EXPECT_NEAR(r.total, 1.0, 1e-9);
}

TEST(FlowReward, InitialPoseFarEe) {
  const FlowRewardContext ctx = linear_context(40);
  DoorState s = placed_door();
  s.ee = Eigen::Vector3d(50.0, 0.0, 0.0);
  const FlowReward r = flow_reward(s, ctx);
  EXPECT_EQ(r.t_star, 1);
  EXPECT_NEAR(r.particle, 0.75 / 40.0, 1e-15);
  EXPECT_NEAR(r.total, 0.75 / 40.0, 1e-9);
}

TEST(FlowReward, HalfwayAlongLinearFlow) {
  const FlowRewardContext ctx = linear_context(100);
  DoorState s = placed_door();
  s.hinge_angle = 0.25;
  const FlowReward r = flow_reward(s, ctx);
  // Exhaustive scan of the mean particle distance.
  const PointSet3 cur = s.particles(ctx.particle_template());
  Eigen::Index best = 0;
  double best_d = 1e9;
  for (Eigen::Index t = 0; t < 100; ++t) {
    const double d = (cur - ctx.flow().positions(t)).colwise().norm().mean();
    if (d < best_d) {
      best_d = d;
      best = t;
    }
  }
  EXPECT_EQ(r.t_star, best + 1);
  EXPECT_NEAR(static_cast<double>(r.t_star), 50.0, 1.0);
  EXPECT_NEAR(r.particle, 0.375, 0.75 / 100.0 + 1e-12);  // one timestep either side
}

// Property: both rewards stay inside their ranges.
TEST(Rewards, Bounded) {
  std::mt19937_64 rng(91);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const FlowRewardContext ctx = linear_context(30);
  for (int k = 0; k < 500; ++k) {
    DoorState s = placed_door();
    s.hinge_angle = 0.5 * kPi * u(rng);
    s.handle_angle = 0.5 * kPi * u(rng);
    s.ee = Eigen::Vector3d(u(rng), u(rng), u(rng));
    const double a = object_state_reward(s).total, b = flow_reward(s, ctx).total;
    EXPECT_GT(a, -0.25);
    EXPECT_LE(a, 1.0);
    EXPECT_GT(b, 0.0);
    EXPECT_LE(b, 1.0);
  }
}

TEST(Door, HandleGeometry) {
  DoorState s;
  EXPECT_LT((s.handle_position() - Eigen::Vector3d(0.15, 0.03, 0.15)).norm(), 1e-15);
  s.hinge_angle = 0.5 * kPi;
  EXPECT_LT((s.handle_position() - Eigen::Vector3d(-0.03, 0.15, 0.15)).norm(), 1e-15);
}

TEST(Door, StepIntegratesAndClamps) {
  const DoorState s = placed_door();
  const DoorState same = door_step(s, {});
  EXPECT_EQ(same.hinge_angle, s.hinge_angle);
  EXPECT_EQ(same.handle_angle, s.handle_angle);
  EXPECT_EQ(same.ee, s.ee);
  const DoorState opened = door_step(s, {0.1, 0.0, Eigen::Vector3d::Zero()});
  EXPECT_NEAR(opened.hinge_angle, 0.1, 1e-15);
  const DoorState closed = door_step(s, {-0.1, -0.2, Eigen::Vector3d::Zero()});
  EXPECT_EQ(closed.hinge_angle, 0.0);
  EXPECT_EQ(closed.handle_angle, 0.0);
  EXPECT_THROW(door_step(s, {0.2, 0.0, Eigen::Vector3d::Zero()}), Error);
  EXPECT_THROW(door_step(s, {0.0, 0.0, Eigen::Vector3d(0.0, 0.06, 0.0)}), Error);
}

TEST(Door, ParticlesFollowHinge) {
  const PointSet3 tpl = panel_particles(DoorGeometry{});
  DoorState s = placed_door();
  for (int k = 0; k < 5; ++k) s = door_step(s, {0.1, 0.0, Eigen::Vector3d::Zero()});
  const double c = std::cos(0.5), sn = std::sin(0.5);
  Eigen::Matrix3d rz;
  rz << c, -sn, 0.0, sn, c, 0.0, 0.0, 0.0, 1.0;
  EXPECT_LT((s.particles(tpl) - rz * tpl).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Episode, ScriptedOpenerSucceeds) {
  const FlowRewardContext ctx = linear_context(50, 0.35);
  const EpisodeTrace trace = evaluate_scripted_episode(scripted_opener(), ctx, RewardKind::kFlow, placed_door());
  ASSERT_EQ(trace.rows.size(), 500u);
  EXPECT_TRUE(trace.success);
  EXPECT_GT(trace.success_step, 0);
  for (std::size_t k = 1; k < trace.rows.size(); ++k) EXPECT_GE(trace.rows[k].r_particle, trace.rows[k - 1].r_particle);
  EXPECT_EQ(trace.rows.back().t_star, 50);
  EXPECT_NEAR(trace.rows.back().theta_hinge, 0.35, 1e-12);
  const EpisodeTrace state = evaluate_scripted_episode(scripted_opener(), ctx, RewardKind::kState, placed_door());
  EXPECT_EQ(state.rows.back().reward, 1.0);
}

TEST(Episode, DoNothingFails) {
  const FlowRewardContext ctx = linear_context(50, 0.35);
  const EpisodeTrace trace = evaluate_scripted_episode({{}, 200}, ctx, RewardKind::kState, placed_door());
  EXPECT_FALSE(trace.success);
  ASSERT_EQ(trace.rows.size(), 200u);
  for (const TraceRow& r : trace.rows) EXPECT_EQ(r.reward, trace.rows.front().reward);
  EXPECT_THROW(evaluate_scripted_episode({{}, 501}, ctx, RewardKind::kState, placed_door()), Error);
}

TEST(Policy, JsonRoundTripAndValidation) {
  const ScriptedPolicy p = scripted_opener(0.4);
  const ScriptedPolicy back = policy_from_json(policy_to_json(p));
  ASSERT_EQ(back.waypoints.size(), 3u);
  EXPECT_EQ(*back.waypoints[2].hinge, 0.4);
  EXPECT_TRUE(back.waypoints[0].ee_to_handle);
  EXPECT_THROW(policy_from_json({{"waypoints", {{{"hinge", 0.1}, {"speed", 2}}}}}), Error);
  EXPECT_THROW(policy_from_json({{"steps", 3}}), Error);
  const ScriptedPolicy fixed = policy_from_json({{"waypoints", {{{"ee", {0.1, 0.2, 0.3}}}}}});
  EXPECT_EQ(*fixed.waypoints[0].ee, Eigen::Vector3d(0.1, 0.2, 0.3));
}

}  // namespace
}  // namespace objflow::door
