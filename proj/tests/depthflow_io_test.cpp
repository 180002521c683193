#include <cstring>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "objflow/depthflow/io.hpp"
#include "objflow/depthflow/lift.hpp"
#include "objflow/synthetic.hpp"

namespace objflow {
namespace {

namespace fs = std::filesystem;

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("objflow_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

void write_raw(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

using DepthFile = TempDir;

TEST_F(DepthFile, RoundTripAndLayout) {
  DepthMap d(3, 4);
  for (Eigen::Index k = 0; k < d.size(); ++k) d(k) = 0.25f * static_cast<float>(k);
  write_depth_map(dir_ / "a.d2fd", d);
  EXPECT_TRUE((read_depth_map((dir_ / "a.d2fd").string()) == d).all());
  const std::string bytes = encode_depth_map(d);
  ASSERT_EQ(bytes.size(), 12u + 4u * 12u);
  EXPECT_EQ(bytes.substr(0, 4), "D2FD");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 4u);  // width, little-endian
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 3u);  // height
  float second = 0.0f;
  std::memcpy(&second, bytes.data() + 16, 4);
  EXPECT_EQ(second, 0.25f);  // row-major: (0, 1)
}

TEST_F(DepthFile, RejectsCorruptFiles) {
  const std::string good = encode_depth_map(DepthMap::Constant(2, 2, 1.0f));
  const auto expect_validation = [&](const std::string& bytes, const std::string& needle) {
    write_raw(dir_ / "x.d2fd", bytes);
    try {
      read_depth_map((dir_ / "x.d2fd").string());
      FAIL() << needle;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kValidation);
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  expect_validation("XXFD" + good.substr(4), "bad magic at");
  expect_validation(good.substr(0, good.size() - 2), "truncated");
  expect_validation(good + "z", "trailing");
  try {
    read_depth_map((dir_ / "missing.d2fd").string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
  }
}

using TrackFile = TempDir;

TEST_F(TrackFile, RoundTripWithMissingRows) {
  write_raw(dir_ / "t.csv", "t,i,u,v,visible\n0,0,1.5,2,1\n0,1,3,4,1\n1,1,5,6.25,0\n");
  const Tracks2D tr = read_tracks((dir_ / "t.csv").string());
  ASSERT_EQ(tr.frames(), 2);
  ASSERT_EQ(tr.points(), 2);
  EXPECT_TRUE(tr.visible(0, 0));
  EXPECT_FALSE(tr.visible(1, 0));  // no row
  EXPECT_FALSE(tr.visible(1, 1));
  EXPECT_EQ(tr.uv[1](1, 1), 6.25);
  write_raw(dir_ / "bad.csv", "t,i,u,v\n0,0,1,2\n");
  EXPECT_THROW(read_tracks((dir_ / "bad.csv").string()), Error);
}

using BundleFile = TempDir;

TEST_F(BundleFile, WriteLoadLiftRoundTrip) {
  const CameraModel cam = synth::top_down_camera({0.0, 0.0, 1.0});
  PointSet3 p0(3, 9);
  for (int i = 0; i < 9; ++i) p0.col(i) = Eigen::Vector3d(-0.1 + 0.1 * (i % 3), -0.1 + 0.1 * (i / 3), 0.02);
  std::vector<RigidTransform> motion;
  for (int t = 0; t < 5; ++t) motion.push_back(RigidTransform::from_translation({0.01 * t, 0.0, 0.0}));
  synth::RenderOptions opts;
  opts.part_masks = true;
  const FlowBundle b = synth::render_bundle(cam, synth::rigid_motion(p0, motion), opts);
  const std::string manifest = write_bundle(dir_ / "bundle", b);
  const FlowBundle loaded = load_bundle(manifest);
  ASSERT_EQ(loaded.frames(), 5);
  ASSERT_TRUE(loaded.part_masks.has_value());
  EXPECT_TRUE((loaded.depths[3] == b.depths[3]).all());
  const auto a = lift_flow(b, opts.truth).flow;
  const auto c = lift_flow(loaded, opts.truth).flow;
  for (Eigen::Index t = 0; t < 5; ++t) EXPECT_LT((a.positions(t) - c.positions(t)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((c.positions(4) - motion[4].apply(p0)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST_F(BundleFile, ManifestRejectsUnknownKeys) {
  io::write_json(dir_ / "bundle.json", {{"tracks", "t.csv"}, {"depth_dir", "d"}, {"ref_depth", "r"},
                                        {"object_mask", "m"}, {"camera", "c"}, {"colour", "x"}});
  try {
    read_bundle_manifest((dir_ / "bundle.json").string());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kValidation);
  }
}

using FlowFile = TempDir;

TEST_F(FlowFile, CsvAndSidecarRoundTrip) {
  std::vector<PointSet3> pos(2, PointSet3::Zero(3, 3));
  pos[1].col(2) = Eigen::Vector3d(0.1, 1.0 / 3.0, -2.5);
  VisibilityMask vis = VisibilityMask::Constant(2, 3, true);
  vis(1, 0) = false;
  pos[1].col(0).setConstant(std::nan(""));
  const ObjectFlow3D flow(pos, vis);
  const ScaleShift calib{0.8, 0.1};
  write_flow(dir_ / "flow.csv", flow, &calib, {{"note", "x"}});
  const ObjectFlow3D back = read_flow((dir_ / "flow.csv").string());
  EXPECT_TRUE((back.visibility() == vis).all());
  EXPECT_EQ(back.positions(1).col(2), pos[1].col(2));  // shortest round-trip formatting is exact
  const auto side = read_flow_sidecar((dir_ / "flow.csv").string());
  EXPECT_EQ(side.at("T"), 2);
  EXPECT_EQ(side.at("n"), 3);
  EXPECT_EQ(side.at("units"), "m");
  EXPECT_EQ(side.at("calibration").at("s"), 0.8);
  EXPECT_EQ(side.at("note"), "x");
}

TEST(CameraFile, RoundTrip) {
  const CameraModel cam = synth::facing_camera({0.4, -2.0, 1.0});
  const CameraModel back = camera_from_json(camera_to_json(cam));
  EXPECT_EQ(back.fx(), cam.fx());
  EXPECT_TRUE(back.extrinsics().is_approx(cam.extrinsics(), 1e-12));
}

}  // namespace
}  // namespace objflow
