#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "objflow/depthflow/matching.hpp"
#include "objflow/doorreward/door.hpp"

namespace objflow::door {

inline constexpr double kCompletionAngle = 0.3;            // rad
inline constexpr double kSuccessAngle = 17.0 * kPi / 180.0;  // episode success
inline constexpr int kMaxHorizon = 500;

struct StateReward {
  double total = 0.0;
  double reach = 0.0;
  double rotation = 0.0;
  bool completed = false;
};

inline StateReward object_state_reward(const DoorState& s) {
  StateReward r;
  r.reach = 0.25 * (1.0 - std::tanh(10.0 * s.gripper_handle_distance()));
  r.rotation = std::clamp(0.25 * std::abs(s.handle_angle) / (0.5 * kPi), -0.25, 0.25);
  r.completed = s.hinge_angle > kCompletionAngle;
  r.total = r.completed ? 1.0 : r.reach + r.rotation;
  return r;
}

/// Reference flow P_1..P_T in the door body frame; the particle template is
/// its first frame.
class FlowRewardContext {
 public:
  explicit FlowRewardContext(ObjectFlow3D flow) : flow_(std::move(flow)) {
    if (flow_.frames() < 1 || flow_.points() < 1) throw Error(ErrorKind::kInvalidArgument, "door reference flow is empty");
    if (!flow_.visibility().all()) throw Error(ErrorKind::kInvalidArgument, "door reference flow must be fully visible");
  }

  const ObjectFlow3D& flow() const { return flow_; }
  const PointSet3& particle_template() const { return flow_.positions(0); }
  Eigen::Index t_end() const { return flow_.frames(); }

 private:
  ObjectFlow3D flow_;
};

struct FlowReward {
  double total = 0.0;
  double particle = 0.0;
  double ee = 0.0;
  Eigen::Index t_star = 1;  // 1-based
};

inline FlowReward flow_reward(const DoorState& s, const FlowRewardContext& ctx) {
  const PointSet3 current = s.particles(ctx.particle_template());
  FlowReward r;
  r.t_star = nearest_timestep(current, ctx.flow()) + 1;
  r.particle = 0.75 * static_cast<double>(r.t_star) / static_cast<double>(ctx.t_end());
  const Eigen::Vector3d mean = current.rowwise().mean();
  r.ee = 0.25 * (1.0 - std::tanh(10.0 * (s.ee_in_door() - mean).norm()));
  r.total = r.particle + r.ee;
  return r;
}

enum class RewardKind { kState, kFlow };

inline RewardKind parse_reward_kind(std::string_view s) {
  if (s == "state") return RewardKind::kState;
  if (s == "flow") return RewardKind::kFlow;
  throw Error(ErrorKind::kInvalidArgument, "reward must be state or flow, got '" + std::string(s) + "'");
}

/// Target for one scripted phase; unset fields keep their current value.
struct Waypoint {
  std::optional<double> hinge;
  std::optional<double> handle;
  std::optional<Eigen::Vector3d> ee;  // world frame
  bool ee_to_handle = false;          // track the current handle position instead
};

struct ScriptedPolicy {
  std::vector<Waypoint> waypoints;
  int horizon = kMaxHorizon;
};

/// {"horizon": H, "waypoints": [{"hinge": a, "handle": b, "ee": [x,y,z] | "handle"}]}
inline ScriptedPolicy policy_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorKind::kValidation, "policy must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key != "horizon" && key != "waypoints") throw Error(ErrorKind::kValidation, "policy: unknown key '" + key + "'");
  }
  ScriptedPolicy p;
  if (j.contains("horizon")) p.horizon = j.at("horizon").get<int>();
  for (const auto& w : j.value("waypoints", nlohmann::json::array())) {
    Waypoint wp;
    for (const auto& [key, value] : w.items()) {
      if (key == "hinge") {
        wp.hinge = value.get<double>();
      } else if (key == "handle") {
        wp.handle = value.get<double>();
      } else if (key == "ee") {
        if (value.is_string() && value.get<std::string>() == "handle") {
          wp.ee_to_handle = true;
        } else if (value.is_array() && value.size() == 3) {
          wp.ee = Eigen::Vector3d(value[0].get<double>(), value[1].get<double>(), value[2].get<double>());
        } else {
          throw Error(ErrorKind::kValidation, "policy: waypoint ee must be [x,y,z] or \"handle\"");
        }
      } else {
        throw Error(ErrorKind::kValidation, "policy: unknown waypoint key '" + key + "'");
      }
    }
    p.waypoints.push_back(wp);
  }
  return p;
}

inline nlohmann::json policy_to_json(const ScriptedPolicy& p) {
  nlohmann::json wps = nlohmann::json::array();
  for (const Waypoint& w : p.waypoints) {
    nlohmann::json j = nlohmann::json::object();
    if (w.hinge) j["hinge"] = *w.hinge;
    if (w.handle) j["handle"] = *w.handle;
    if (w.ee_to_handle) {
      j["ee"] = "handle";
    } else if (w.ee) {
      j["ee"] = {w.ee->x(), w.ee->y(), w.ee->z()};
    }
    wps.push_back(j);
  }
  return {{"horizon", p.horizon}, {"waypoints", wps}};
}

/// Reach the handle, turn it, then pull the door to `open_angle` while
/// holding the handle.
inline ScriptedPolicy scripted_opener(double open_angle = 0.35, double handle_turn = 0.25 * kPi) {
  Waypoint reach, turn, pull;
  reach.ee_to_handle = true;
  turn.ee_to_handle = true;
  turn.handle = handle_turn;
  pull.ee_to_handle = true;
  pull.hinge = open_angle;
  return {{reach, turn, pull}, kMaxHorizon};
}

struct TraceRow {
  int step = 0;
  double reward = 0.0;
  Eigen::Index t_star = 0;
  double theta_hinge = 0.0;
  double r_particle = 0.0;
};

struct EpisodeTrace {
  std::vector<TraceRow> rows;
  bool success = false;
  int success_step = -1;
};

/// Per-axis clamp toward `target`; returns the bounded action.
inline DoorAction waypoint_action(const DoorState& s, const Waypoint& w, const DoorLimits& lim) {
  DoorAction a;
  if (w.hinge) a.hinge = std::clamp(std::clamp(*w.hinge, lim.hinge_min, lim.hinge_max) - s.hinge_angle, -lim.max_hinge_step, lim.max_hinge_step);
  if (w.handle) {
    a.handle = std::clamp(std::clamp(*w.handle, lim.handle_min, lim.handle_max) - s.handle_angle, -lim.max_handle_step, lim.max_handle_step);
  }
  std::optional<Eigen::Vector3d> target = w.ee;
  if (w.ee_to_handle) target = s.handle_position();
  if (target) {
    const Eigen::Vector3d d = *target - s.ee;
    a.ee = d.norm() > lim.max_ee_step ? Eigen::Vector3d(d * (lim.max_ee_step / d.norm())) : d;
  }
  return a;
}

/// Roll the scripted policy for `horizon` steps, recording the chosen reward
/// after each step. Success once the hinge reaches 17 degrees.
inline EpisodeTrace evaluate_scripted_episode(const ScriptedPolicy& policy, const FlowRewardContext& ctx, RewardKind kind,
                                              DoorState state, const DoorLimits& lim = {}) {
  if (policy.horizon < 1 || policy.horizon > kMaxHorizon) throw Error(ErrorKind::kInvalidArgument, "episode horizon must be in [1, 500]");
  EpisodeTrace trace;
  std::size_t phase = 0;
  for (int step = 1; step <= policy.horizon; ++step) {
    DoorAction a;
    while (phase < policy.waypoints.size()) {
      a = waypoint_action(state, policy.waypoints[phase], lim);
      if (std::abs(a.hinge) > 1e-12 || std::abs(a.handle) > 1e-12 || a.ee.norm() > 1e-12) break;
      a = DoorAction{};
      ++phase;
    }
    state = door_step(state, a, lim);
    const FlowReward fr = flow_reward(state, ctx);
    const double reward = kind == RewardKind::kFlow ? fr.total : object_state_reward(state).total;
    trace.rows.push_back({step, reward, fr.t_star, state.hinge_angle, fr.particle});
    if (!trace.success && state.hinge_angle >= kSuccessAngle) {
      trace.success = true;
      trace.success_step = step;
    }
  }
  return trace;
}

}  // namespace objflow::door
