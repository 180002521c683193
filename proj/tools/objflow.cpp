#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "objflow/pipeline/run.hpp"

namespace fs = std::filesystem;
using namespace objflow;
using namespace objflow::pipeline;

namespace {

std::vector<double> parse_list(const std::string& s, std::size_t n, const char* what) {
  std::vector<double> v;
  for (auto f : io::split_csv_line(s)) v.push_back(io::parse_double(f, what));
  if (v.size() != n) throw Error(ErrorKind::kInvalidArgument, std::string(what) + " needs " + std::to_string(n) + " comma-separated numbers");
  return v;
}

fs::path prepare_out(const std::string& out) {
  fs::create_directories(out);
  return out;
}

int not_converged(const std::string& msg) {
  std::cerr << "objflow: " << msg << '\n';
  return kExitNotConverged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Object-flow toolkit: depth calibration, flow lifting and planning"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);
  const log::Logger logger;
  std::function<int()> action;

  // calibrate
  std::string bundle, out, flow_path, calib_path;
  CalibrationOptions copts;
  auto* cal = app.add_subcommand("calibrate", "Fit depth scale and shift against the metric reference");
  cal->add_option("--bundle", bundle, "bundle.json")->required();
  cal->add_option("--out", out, "output directory")->required();
  cal->add_option("--lower-percentile", copts.lower_percentile)->check(CLI::Range(0.0, 100.0));
  cal->add_option("--upper-percentile", copts.upper_percentile)->check(CLI::Range(0.0, 100.0));
  cal->callback([&] {
    action = [&] {
      const FlowBundle b = load_bundle(bundle);
      const CalibrationStage c = run_calibrate(b, copts);
      write_calibration(prepare_out(out), c, copts);
      logger.info("calibrate", "fit", {{"s", c.calib.scale}, {"b", c.calib.shift}, {"pixels", c.pixels}});
      return 0;
    };
  });

  // lift
  auto* lift = app.add_subcommand("lift", "Back-project tracks into metric 3D flow");
  lift->add_option("--bundle", bundle)->required();
  lift->add_option("--calibration", calib_path, "calibration.json")->required();
  lift->add_option("--out", out)->required();
  lift->callback([&] {
    action = [&] {
      const FlowBundle b = load_bundle(bundle);
      const ScaleShift c = load_calibration(calib_path);
      const LiftResult r = lift_flow(b, c);
      write_lift(prepare_out(out), r, c);
      logger.info("lift", "lifted", {{"frames", r.flow.frames()}, {"points", r.flow.points()}});
      return 0;
    };
  });

  // filter-movable
  double threshold = 1.0;
  auto* mov = app.add_subcommand("filter-movable", "Keep the tracks that move");
  mov->add_option("--bundle", bundle)->required();
  mov->add_option("--flow", flow_path, "flow.csv from lift")->required();
  mov->add_option("--threshold-px", threshold)->check(CLI::Range(0.0, 1e4));
  mov->add_option("--out", out)->required();
  mov->callback([&] {
    action = [&] {
      const FlowBundle b = load_bundle(bundle);
      const ObjectFlow3D flow = read_flow(flow_path);
      const MovableResult m = filter_movable(b.tracks, b.part_masks, threshold);
      write_movable(prepare_out(out), m, flow, threshold);
      logger.info("filter-movable", "classified", {{"movable", m.movable.size()}, {"unclassified", m.unclassified.size()}});
      return 0;
    };
  });

  // fit-rigid
  std::string out_file;
  auto* rigid = app.add_subcommand("fit-rigid", "Per-frame rigid fit of a flow (baseline)");
  rigid->add_option("--flow", flow_path)->required();
  rigid->add_option("--out", out_file, "output CSV")->required();
  rigid->callback([&] {
    action = [&] {
      const auto frames = baseline_rigid_trajectory(read_flow(flow_path));
      io::write_file_atomic(out_file, encode_rigid_frames(frames));
      std::size_t unreliable = 0;
      for (const auto& f : frames) unreliable += f.reliable ? 0 : 1;
      logger.info("fit-rigid", "fitted", {{"frames", frames.size()}, {"unreliable", unreliable}});
      return 0;
    };
  });

  // plan-traj
  std::string movable_path, weights;
  TrajoptStageConfig tcfg;
  auto* traj = app.add_subcommand("plan-traj", "Optimize a joint trajectory that reproduces the flow");
  traj->add_option("--flow", flow_path, "flow.csv from lift")->required();
  traj->add_option("--movable", movable_path, "movable.json from filter-movable")->required();
  traj->add_option("--robot", tcfg.robot)->required();
  traj->add_option("--grasps", tcfg.grasps)->required();
  traj->add_option("--thumb", tcfg.thumb);
  traj->add_option("--weights", weights, "wf,wr,ws,wm");
  traj->add_option("--horizon", tcfg.horizon, "0 uses one step per flow frame")->check(CLI::NonNegativeNumber);
  traj->add_option("--max-iterations", tcfg.max_iterations)->check(CLI::PositiveNumber);
  traj->add_option("--grasp-radius", tcfg.grasp_radius)->check(CLI::PositiveNumber);
  traj->add_option("--out", out)->required();
  traj->callback([&] {
    action = [&] {
      if (!weights.empty()) tcfg.weights = parse_weights(weights);
      const TrajoptInputs in = load_trajopt_inputs(tcfg);
      const TrajoptStage s = run_trajopt(read_flow(flow_path), load_movable_indices(movable_path), in, tcfg);
      write_trajopt(prepare_out(out), s, tcfg);
      logger.info("plan-traj", "optimized", {{"converged", s.result.converged}, {"task", s.result.costs.task}});
      return s.result.converged ? 0 : not_converged("trajectory optimization did not converge: " + s.result.stop_reason);
    };
  });

  // pusht
  std::string start, dynamics = "oracle";
  std::uint64_t seed = 0;
  PushStageConfig pcfg;
  auto* push = app.add_subcommand("pusht", "Plan pushes that move the T-block along the flow");
  push->add_option("--flow", flow_path, "movable_flow.csv")->required();
  push->add_option("--start", start, "x,y,theta")->required();
  push->add_option("--seed", seed)->required();
  push->add_option("--dynamics", dynamics)->check(CLI::IsMember({"oracle", "heuristic"}));
  push->add_option("--samples", pcfg.episode.samples)->check(CLI::Range(1, 4096));
  push->add_option("--max-pushes", pcfg.episode.max_pushes)->check(CLI::Range(0, 1000));
  push->add_option("--out", out)->required();
  push->callback([&] {
    action = [&] {
      const auto s = parse_list(start, 3, "--start");
      pcfg.start = {s[0], s[1], push::wrap_angle(s[2])};
      pcfg.dynamics = push::parse_dynamics(dynamics);
      const std::uint64_t stage_seed = derive_seed(seed, "pusht");
      const push::EpisodeLog log = run_pusht(read_flow(flow_path), pcfg, stage_seed);
      write_pusht(prepare_out(out), log, pcfg.dynamics, stage_seed);
      std::cout << push_summary(log) << '\n';
      return log.success ? 0 : kExitNotConverged;
    };
  });

  // door-eval
  std::string policy, reward = "flow", door_frame, ee_start;
  auto* door_cmd = app.add_subcommand("door-eval", "Score a scripted door policy against a reference flow");
  door_cmd->add_option("--flow", flow_path, "flow of the door in world coordinates")->required();
  door_cmd->add_option("--policy", policy, "scripted policy JSON")->required();
  door_cmd->add_option("--reward", reward)->check(CLI::IsMember({"flow", "state"}));
  door_cmd->add_option("--door-frame", door_frame, "x,y,z,yaw of the door frame");
  door_cmd->add_option("--ee-start", ee_start, "x,y,z");
  door_cmd->add_option("--out", out)->required();
  door_cmd->callback([&] {
    action = [&] {
      DoorStageConfig d;
      d.reward = door::parse_reward_kind(reward);
      if (!door_frame.empty()) {
        const auto f = parse_list(door_frame, 4, "--door-frame");
        d.door_frame = RigidTransform::from_axis_angle(Eigen::Vector3d::UnitZ(), f[3], {f[0], f[1], f[2]});
      }
      if (!ee_start.empty()) {
        const auto e = parse_list(ee_start, 3, "--ee-start");
        d.ee_start = Eigen::Vector3d(e[0], e[1], e[2]);
      }
      const door::EpisodeTrace trace = run_door(read_flow(flow_path), load_policy(policy), d);
      write_door(prepare_out(out), trace, d.reward);
      std::cout << "success=" << (trace.success ? "true" : "false") << " success_step=" << trace.success_step << '\n';
      return trace.success ? 0 : kExitNotConverged;
    };
  });

  // run
  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::string out_override;
  auto* run = app.add_subcommand("run", "Full pipeline from a config file");
  run->add_option("--config", config_path)->required();
  run->add_option("--seed", seed_override, "overrides the config seed");
  run->add_option("--out", out_override, "overrides the config output_dir");
  run->callback([&] {
    action = [&] {
      nlohmann::json j = io::read_json(config_path);
      if (j.is_object() && seed_override) j["seed"] = *seed_override;
      if (j.is_object() && !out_override.empty()) j["output_dir"] = fs::absolute(out_override).string();
      const PipelineConfig cfg = parse_config(j, fs::path(config_path).parent_path());
      const RunResult r = run_pipeline(cfg, logger);
      if (r.exit_code != 0) std::cerr << "objflow: " << r.message << '\n';
      std::cout << r.manifest_path << '\n';
      return r.exit_code;
    };
  });

  // validate
  auto* val = app.add_subcommand("validate", "Check a bundle and list every problem");
  val->add_option("--bundle", bundle)->required();
  val->callback([&] {
    action = [&] {
      const ValidationReport r = validate_bundle(bundle);
      for (const auto& v : r.violations) std::cout << v << '\n';
      if (r.ok()) std::cout << "ok\n";
      return r.ok() ? 0 : static_cast<int>(kExitValidation);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }
  try {
    return action();
  } catch (const Error& e) {
    std::cerr << "objflow: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "objflow: " << e.what() << '\n';
    return kExitStage;
  }
}
