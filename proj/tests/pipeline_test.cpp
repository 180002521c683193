#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "objflow/pipeline/demo.hpp"
#include "objflow/pipeline/run.hpp"

namespace objflow::pipeline {
namespace {

namespace fs = std::filesystem;

class PipelineDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("objflow_pipe_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string demo(demo::Scenario s, std::uint64_t seed = 5, const std::string& sub = "d") {
    return demo::write_demo(dir_ / sub, s, seed);
  }

  fs::path dir_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

const log::Logger& quiet() {
  static std::ostringstream sink;
  static const log::Logger l(sink, log::Level::kQuiet);
  return l;
}

RunResult run_config(const std::string& path, std::optional<std::uint64_t> seed = std::nullopt, const std::string& out = "") {
  nlohmann::json j = io::read_json(path);
  if (seed) j["seed"] = *seed;
  if (!out.empty()) j["output_dir"] = out;
  return run_pipeline(parse_config(j, fs::path(path).parent_path()), quiet());
}

// ---------------------------------------------------------------------------

nlohmann::json minimal_config() {
  return {{"schema_version", 1},
          {"seed", 3},
          {"bundle", "b/bundle.json"},
          {"planner", {{"kind", "pusht"}, {"pusht", {{"start_pose", {0.1, 0.0, 0.2}}}}}}};
}

void expect_validation(const nlohmann::json& j, const std::string& needle) {
  try {
    parse_config(j, "/base");
    FAIL() << needle;
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kValidation);
    EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
  }
}

TEST(Config, ParsesAndResolvesPaths) {
  const PipelineConfig c = parse_config(minimal_config(), "/base");
  EXPECT_EQ(c.seed, 3u);
  EXPECT_EQ(c.bundle, "/base/b/bundle.json");
  EXPECT_EQ(c.output_dir, "/base/out");
  EXPECT_EQ(c.planner, PlannerKind::kPushT);
  EXPECT_EQ(c.pusht.episode.samples, 64);
  EXPECT_EQ(c.pusht.dynamics, push::Dynamics::kOracle);
  EXPECT_DOUBLE_EQ(c.pusht.start.theta, 0.2);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  nlohmann::json j = minimal_config();
  j["colour"] = 1;
  expect_validation(j, "colour");
  j = minimal_config();
  j["planner"]["pusht"]["sampels"] = 8;
  expect_validation(j, "sampels");
  j = minimal_config();
  j.erase("seed");
  expect_validation(j, "seed");
  j = minimal_config();
  j["seed"] = -1;
  expect_validation(j, "seed");
  j = minimal_config();
  j["schema_version"] = 2;
  expect_validation(j, "schema_version");
  j = minimal_config();
  j["planner"]["kind"] = "rrt";
  expect_validation(j, "planner.kind");
  j = minimal_config();
  j["planner"]["pusht"].erase("start_pose");
  expect_validation(j, "start_pose");
  j = minimal_config();
  j["calibrate"] = {{"lower_percentile", 150.0}};
  expect_validation(j, "calibrate");
  j = minimal_config();
  j["planner"]["pusht"]["dynamics"] = "learned";
  expect_validation(j, "dynamics");
}

// ---------------------------------------------------------------------------

using Validate = PipelineDir;

TEST_F(Validate, FixtureIsClean) {
  demo(demo::Scenario::kPushT);
  EXPECT_TRUE(validate_bundle((dir_ / "d/bundle/bundle.json").string()).violations.empty());
}

TEST_F(Validate, BadMagicNamesTheFile) {
  demo(demo::Scenario::kPushT);
  const fs::path bad = dir_ / "d/bundle/depth/depth_00003.d2fd";
  std::string bytes = slurp(bad);
  bytes[0] = 'X';
  std::ofstream(bad, std::ios::binary) << bytes;
  const auto r = validate_bundle((dir_ / "d/bundle/bundle.json").string());
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_NE(r.violations[0].find("bad magic at " + bad.string()), std::string::npos) << r.violations[0];
}

TEST_F(Validate, OutOfImageTrackReportsCoordinates) {
  demo(demo::Scenario::kPushT);
  const fs::path tracks_path = dir_ / "d/bundle/tracks.csv";
  Tracks2D tracks = read_tracks(tracks_path.string());
  tracks.uv[2].col(7) = Eigen::Vector2d(-3.0, 10.0);
  tracks.visible(2, 7) = true;
  io::write_file_atomic(tracks_path, encode_tracks(tracks));
  const auto r = validate_bundle((dir_ / "d/bundle/bundle.json").string());
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_NE(r.violations[0].find("(t=2, i=7)"), std::string::npos) << r.violations[0];
  EXPECT_NE(r.violations[0].find("(-3, 10)"), std::string::npos) << r.violations[0];
}

TEST_F(Validate, ReportsEveryViolation) {
  demo(demo::Scenario::kPushT);
  fs::remove(dir_ / "d/bundle/ref_depth.d2fd");
  fs::remove(dir_ / "d/bundle/depth/depth_00010.d2fd");
  const auto r = validate_bundle((dir_ / "d/bundle/bundle.json").string());
  EXPECT_GE(r.violations.size(), 3u);
  std::string all;
  for (const auto& v : r.violations) all += v + "\n";
  EXPECT_NE(all.find("ref_depth.d2fd"), std::string::npos) << all;
  EXPECT_NE(all.find("depth_00010.d2fd"), std::string::npos) << all;
}

// ---------------------------------------------------------------------------

using PipelineRun = PipelineDir;

TEST_F(PipelineRun, MissingDepthFileFailsBeforeAnyStage) {
  const std::string cfg = demo(demo::Scenario::kPushT);
  const fs::path missing = dir_ / "d/bundle/depth/depth_00004.d2fd";
  fs::remove(missing);
  const RunResult r = run_config(cfg);
  EXPECT_EQ(r.exit_code, kExitValidation);
  EXPECT_NE(r.message.find(missing.string()), std::string::npos) << r.message;
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir_ / "d/out")) files.push_back(e.path().filename().string());
  EXPECT_EQ(files, std::vector<std::string>{"manifest.json"});
  ASSERT_EQ(r.manifest.at("stages").size(), 1u);
  EXPECT_EQ(r.manifest.at("stages")[0].at("name"), "validate");
  EXPECT_EQ(r.manifest.at("status"), "failed");
}

TEST_F(PipelineRun, TrajoptFixtureCompletesFourStages) {
  const RunResult r = run_config(demo(demo::Scenario::kTrajopt));
  ASSERT_EQ(r.exit_code, kExitOk) << r.message;
  std::vector<std::string> done;
  for (const auto& st : r.manifest.at("stages"))
    if (st.at("name") != "validate" && st.at("status") == "ok") done.push_back(st.at("name"));
  EXPECT_EQ(done, (std::vector<std::string>{"calibrate", "lift", "filter-movable", "trajopt"}));
  const nlohmann::json costs = io::read_json((dir_ / "d/out/costs.json").string());
  EXPECT_TRUE(costs.at("converged").get<bool>());
  EXPECT_EQ(costs.at("grasp").at("index"), 1);  // thumb lands on the true grasp
  EXPECT_EQ(costs.at("grasp").at("reason"), "thumb-proximity");
  EXPECT_LT(costs.at("costs").at("task").get<double>(), 1e-4);
  // Resampled poses are the rows of poses.csv; each gets a joint target row.
  const std::string poses = slurp(dir_ / "d/out/poses.csv"), targets = slurp(dir_ / "d/out/joint_targets.csv");
  EXPECT_GE(std::count(poses.begin(), poses.end(), '\n'), 3);
  EXPECT_EQ(std::count(poses.begin(), poses.end(), '\n'), std::count(targets.begin(), targets.end(), '\n'));
}

// Property: every file in the output directory is listed with its hash.
TEST_F(PipelineRun, ManifestListsEveryOutput) {
  for (auto s : {demo::Scenario::kTrajopt, demo::Scenario::kPushT, demo::Scenario::kDoor}) {
    const std::string sub = "s" + std::to_string(static_cast<int>(s));
    const RunResult r = run_config(demo(s, 5, sub));
    ASSERT_EQ(r.exit_code, kExitOk) << r.message;
    std::set<std::string> listed;
    for (const auto& o : r.manifest.at("outputs")) {
      listed.insert(o.at("path").get<std::string>());
      EXPECT_EQ(o.at("sha256"), hash::sha256_file((dir_ / sub / "out" / o.at("path").get<std::string>()).string()));
    }
    for (const auto& e : fs::directory_iterator(dir_ / sub / "out")) {
      const std::string name = e.path().filename().string();
      if (name == "manifest.json") continue;
      EXPECT_TRUE(listed.count(name)) << name;
    }
    EXPECT_EQ(io::read_json(r.manifest_path), r.manifest);
    EXPECT_EQ(r.manifest.at("config_sha256"), hash::sha256_hex(r.manifest.at("config").dump()));
    EXPECT_FALSE(r.manifest.at("inputs").empty());
  }
}

TEST_F(PipelineRun, SameSeedIsByteIdenticalAndNewSeedChangesPushes) {
  const std::string cfg = demo(demo::Scenario::kPushT);
  const std::string a = (dir_ / "a").string(), b = (dir_ / "b").string(), c = (dir_ / "c").string();
  ASSERT_EQ(run_config(cfg, std::nullopt, a).exit_code, kExitOk);
  ASSERT_EQ(run_config(cfg, std::nullopt, b).exit_code, kExitOk);
  for (const char* f : {"episode.json", "flow.csv", "movable.json", "calibration.json"}) {
    EXPECT_EQ(slurp(fs::path(a) / f), slurp(fs::path(b) / f)) << f;
  }
  ASSERT_NE(run_config(cfg, 6, c).exit_code, kExitStage);
  const auto pa = io::read_json(a + "/episode.json").at("pushes");
  const auto pc = io::read_json(c + "/episode.json").at("pushes");
  ASSERT_FALSE(pa.empty());
  ASSERT_FALSE(pc.empty());
  EXPECT_NE(pa[0].at("start"), pc[0].at("start"));
}

TEST_F(PipelineRun, StageErrorKeepsEarlierOutputs) {
  const std::string cfg = demo(demo::Scenario::kTrajopt);
  nlohmann::json j = io::read_json(cfg);
  j["planner"]["trajopt"]["grasp_radius"] = 1e-4;  // no object point that close to any grasp
  io::write_json(cfg, j);
  const RunResult r = run_config(cfg);
  EXPECT_EQ(r.exit_code, kExitStage);
  EXPECT_NE(r.message.find("trajopt"), std::string::npos);
  const auto& last = r.manifest.at("stages").back();
  EXPECT_EQ(last.at("name"), "trajopt");
  EXPECT_EQ(last.at("status"), "failed");
  EXPECT_EQ(last.at("error_kind"), "no-grasp");
  EXPECT_TRUE(fs::exists(dir_ / "d/out/movable.json"));
  EXPECT_FALSE(fs::exists(dir_ / "d/out/costs.json"));
  EXPECT_EQ(r.manifest.at("outputs").size(), 6u);
}

TEST_F(PipelineRun, DoorEvaluationSucceeds) {
  const RunResult r = run_config(demo(demo::Scenario::kDoor));
  ASSERT_EQ(r.exit_code, kExitOk) << r.message;
  const auto rows = io::read_csv((dir_ / "d/out/reward_trace.csv").string(), "step,reward,t_star,theta_hinge");
  EXPECT_EQ(rows.size(), 500u);
  EXPECT_TRUE(io::read_json((dir_ / "d/out/door_summary.json").string()).at("success").get<bool>());
}

// ---------------------------------------------------------------------------

TEST(Log, OneJsonObjectPerLine) {
  std::ostringstream os;
  const log::Logger l(os, log::Level::kInfo);
  l.debug("lift", "hidden");
  l.info("lift", "lifted", {{"points", 12}});
  l.error("trajopt", "boom");
  std::istringstream in(os.str());
  std::vector<nlohmann::json> recs;
  for (std::string line; std::getline(in, line);) recs.push_back(nlohmann::json::parse(line));
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].at("stage"), "lift");
  EXPECT_EQ(recs[0].at("level"), "info");
  EXPECT_EQ(recs[0].at("msg"), "lifted");
  EXPECT_EQ(recs[0].at("points"), 12);
  EXPECT_EQ(recs[1].at("level"), "error");
  std::ostringstream none;
  log::Logger(none, log::Level::kQuiet).error("x", "y");
  EXPECT_TRUE(none.str().empty());
}

TEST(Hash, KnownVectors) {
  EXPECT_EQ(hash::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(hash::sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

// Property: streams are a pure function of (master, tag, counter).
TEST(Seed, CounterSplit) {
  EXPECT_EQ(derive_seed(7, "pusht", 3), derive_seed(7, "pusht", 3));
  std::set<std::uint64_t> seen;
  for (std::uint64_t m : {0ull, 1ull, 7ull})
    for (const char* tag : {"pusht", "door", "trajopt"})
      for (std::uint64_t k = 0; k < 50; ++k) seen.insert(derive_seed(m, tag, k));
  EXPECT_EQ(seen.size(), 3u * 3u * 50u);
}

// ---------------------------------------------------------------------------

#ifdef OBJFLOW_CLI_PATH
using Cli = PipelineDir;

int sh(const std::string& cmd, std::string* out = nullptr) {
  FILE* p = popen((cmd + " 2>/dev/null").c_str(), "r");
  std::string buf;
  char chunk[256];
  while (std::fgets(chunk, sizeof(chunk), p) != nullptr) buf += chunk;
  const int status = pclose(p);
  if (out != nullptr) *out = buf;
  return WEXITSTATUS(status);
}

TEST_F(Cli, ExitCodesAndPushSummary) {
  const std::string cli = OBJFLOW_CLI_PATH;
  const std::string cfg = demo(demo::Scenario::kPushT);
  const std::string bundle = (dir_ / "d/bundle/bundle.json").string();
  std::string out;
  EXPECT_EQ(sh(cli + " validate --bundle " + bundle, &out), 0);
  EXPECT_EQ(out, "ok\n");
  EXPECT_EQ(sh("OBJFLOW_LOG=quiet " + cli + " run --config " + cfg), 0);
  EXPECT_EQ(sh(cli + " pusht --flow " + (dir_ / "d/out/movable_flow.csv").string() +
                   " --start 0.09,-0.06,0.5 --seed 5 --out " + (dir_ / "p").string(), &out), 0);
  EXPECT_EQ(out.rfind("success=true pushes=", 0), 0u) << out;
  EXPECT_EQ(slurp(dir_ / "p/episode.json"), slurp(dir_ / "d/out/episode.json"));
  EXPECT_EQ(sh(cli + " run --config " + (dir_ / "nope.json").string()), 2);
  EXPECT_EQ(sh(cli + " frobnicate"), 2);
  fs::remove(dir_ / "d/bundle/camera.json");
  EXPECT_EQ(sh(cli + " validate --bundle " + bundle), 2);
}
#endif

}  // namespace
}  // namespace objflow::pipeline
