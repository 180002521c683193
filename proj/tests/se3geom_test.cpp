#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "objflow/se3geom/camera.hpp"
#include "objflow/se3geom/fit_rigid.hpp"
#include "objflow/se3geom/rigid_transform.hpp"

namespace objflow {
namespace {

constexpr double kPi = 3.14159265358979323846;

CameraModel test_camera(RigidTransform ext = {}) { return {525.0, 525.0, 319.5, 239.5, 640, 480, ext}; }

RigidTransform random_transform(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  const Eigen::Vector4d q(n(rng), n(rng), n(rng), n(rng));
  return RigidTransform::from_quaternion(q.normalized(), Eigen::Vector3d(n(rng), n(rng), n(rng)));
}

PointSet3 random_points(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  PointSet3 p(3, n);
  for (int i = 0; i < n; ++i) p.col(i) = Eigen::Vector3d(u(rng), u(rng), u(rng));
  return p;
}

TEST(Backproject, PrincipalRay) {
  const auto cam = test_camera();
  const Eigen::Vector3d p = cam.backproject({cam.cx(), cam.cy()}, 2.0);
  EXPECT_NEAR((p - Eigen::Vector3d(0, 0, 2.0)).norm(), 0.0, 1e-15);
}

TEST(Backproject, OneFocalLengthRight) {
  const CameraModel cam(100.0, 100.0, 320.0, 240.0, 640, 480);
  const Eigen::Vector3d p = cam.backproject({cam.cx() + cam.fx(), cam.cy()}, 1.0);
  EXPECT_NEAR((p - Eigen::Vector3d(1, 0, 1)).norm(), 0.0, 1e-15);
}

TEST(Backproject, WithExtrinsicsMatchesHandComputation) {
  // Camera point: 1.5 * (0.5 / 525, 0.5 / 525, 1) = (1/700, 1/700, 1.5).
  // Rz(90 deg) maps (x, y, z) -> (-y, x, z); then + (0.1, 0, 0).
  const auto cam = test_camera(RigidTransform::from_axis_angle(Eigen::Vector3d::UnitZ(), kPi / 2, {0.1, 0.0, 0.0}));
  const Eigen::Vector3d p = cam.backproject({320.0, 240.0}, 1.5);
  const Eigen::Vector3d expected(0.1 - 1.0 / 700.0, 1.0 / 700.0, 1.5);
  EXPECT_NEAR((p - expected).norm(), 0.0, 1e-12);
}

TEST(Backproject, RejectsBadDepth) {
  const auto cam = test_camera();
  for (double z : {0.0, -1.0, std::nan(""), std::numeric_limits<double>::infinity()}) {
    try {
      cam.backproject({10.0, 10.0}, z);
      FAIL() << "depth " << z << " accepted";
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kInvalidDepth);
    }
  }
}

TEST(Backproject, RejectsOutOfBoundsPixel) {
  const auto cam = test_camera();
  try {
    cam.backproject({-3.0, 10.0}, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kOutOfBounds);
  }
}

TEST(Backproject, ProjectRoundTrip) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 639.0), v(0.0, 479.0), z(0.1, 10.0);
  const auto cam = test_camera(random_transform(rng));
  for (int k = 0; k < 1000; ++k) {
    const Eigen::Vector2d px(u(rng), v(rng));
    double depth = 0.0;
    const Eigen::Vector2d back = cam.project(cam.backproject(px, z(rng)), &depth);
    EXPECT_LT((back - px).norm(), 1e-6);
  }
}

TEST(CameraModel, RejectsBadIntrinsics) {
  EXPECT_THROW(CameraModel(0.0, 1.0, 10, 10, 20, 20), Error);
  EXPECT_THROW(CameraModel(1.0, 1.0, 25, 10, 20, 20), Error);
}

TEST(CameraModel, JsonQuaternionNormChecked) {
  nlohmann::json j = camera_to_json(test_camera());
  EXPECT_NO_THROW(camera_from_json(j));
  j["extrinsics"]["quaternion_wxyz"] = {1.0, 2e-3, 0.0, 0.0};  // |q| - 1 = 2e-6
  try {
    camera_from_json(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kValidation);
  }
  j["extrinsics"]["quaternion_wxyz"] = {1.0, 1e-4, 0.0, 0.0};  // |q| - 1 = 5e-9
  EXPECT_NO_THROW(camera_from_json(j));
}

TEST(RigidTransform, GroupLaws) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 50; ++k) {
    const auto a = random_transform(rng);
    const auto x = random_transform(rng);
    EXPECT_TRUE(compose(a, invert(a)).is_approx(RigidTransform::identity(), 1e-9));
    EXPECT_TRUE(compose(RigidTransform::identity(), x).is_approx(x, 0.0));
  }
}

TEST(RigidTransform, InverseOfRotationAboutZ) {
  const auto r = RigidTransform::from_axis_angle(Eigen::Vector3d::UnitZ(), 0.7);
  EXPECT_TRUE(invert(r).is_approx(RigidTransform::from_axis_angle(Eigen::Vector3d::UnitZ(), -0.7), 1e-15));
}

TEST(RigidTransform, ApplyTranslation) {
  std::mt19937_64 rng(4);
  const PointSet3 p = random_points(rng, 8);
  const Eigen::Vector3d t(0.1, -0.2, 0.3);
  const PointSet3 q = apply(RigidTransform::from_translation(t), p);
  EXPECT_LT(((q - p).colwise() - t).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(RigidTransform, RejectsImproperRotation) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(2, 2) = -1.0;
  EXPECT_THROW(RigidTransform(m, Eigen::Vector3d::Zero()), Error);
  EXPECT_THROW(RigidTransform(2.0 * Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero()), Error);
}

TEST(RigidTransform, QuaternionRoundTrip) {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 20; ++k) {
    const auto a = random_transform(rng);
    EXPECT_TRUE(RigidTransform::from_quaternion(a.quaternion_wxyz(), a.translation()).is_approx(a, 1e-12));
  }
}

TEST(So3, AngleBetweenResolvesTinyAndLargeAngles) {
  const Eigen::Vector3d axis = Eigen::Vector3d(1.0, -2.0, 0.5).normalized();
  const Eigen::Matrix3d base = Eigen::AngleAxisd(0.7, Eigen::Vector3d::UnitY()).toRotationMatrix();
  for (double angle : {1e-12, 3e-9, 1e-4, 1.0, 3.0, kPi - 1e-6}) {
    const Eigen::Matrix3d turned = base * Eigen::AngleAxisd(angle, axis).toRotationMatrix();
    EXPECT_NEAR(so3::angle_between(base, turned), angle, 1e-15 + 1e-9 * angle) << angle;
  }
  EXPECT_EQ(so3::angle_between(base, base), 0.0);
}

TEST(FitRigid, IdentityAndTranslation) {
  std::mt19937_64 rng(11);
  const PointSet3 src = random_points(rng, 10);
  EXPECT_TRUE(fit_rigid(src, src).is_approx(RigidTransform::identity(), 1e-12));
  const PointSet3 dst = src.colwise() + Eigen::Vector3d(0.3, 0.0, 0.0);
  EXPECT_TRUE(fit_rigid(src, dst).is_approx(RigidTransform::from_translation({0.3, 0.0, 0.0}), 1e-12));
}

TEST(FitRigid, RecoversGeneratingTransform) {
  std::mt19937_64 rng(12);
  for (int k = 0; k < 100; ++k) {
    const auto g = random_transform(rng);
    const PointSet3 src = random_points(rng, 10);
    const auto est = fit_rigid(src, g.apply(src));
    EXPECT_LT(so3::angle_between(est.rotation(), g.rotation()), 1e-9);
    EXPECT_LT((est.translation() - g.translation()).norm(), 1e-9);
  }
}

TEST(FitRigid, DegenerateInputsRaise) {
  std::mt19937_64 rng(13);
  PointSet3 line(3, 6);
  for (int i = 0; i < 6; ++i) line.col(i) = Eigen::Vector3d(0.1 * i, 0.2 * i, -0.05 * i);
  try {
    fit_rigid(line, line);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerateGeometry);
  }
  const PointSet3 p = random_points(rng, 5);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(5);
  w[0] = w[3] = 1.0;
  try {
    fit_rigid(p, p, w);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDegenerateCorrespondence);
  }
}

TEST(FitRigid, ZeroWeightsIgnoreOutliers) {
  std::mt19937_64 rng(14);
  const auto g = random_transform(rng);
  const PointSet3 src = random_points(rng, 12);
  PointSet3 dst = g.apply(src);
  Eigen::VectorXd w = Eigen::VectorXd::Ones(12);
  dst.col(3) += Eigen::Vector3d(5, 5, 5);
  w[3] = 0.0;
  EXPECT_TRUE(fit_rigid(src, dst, w).is_approx(g, 1e-9));
}

// Property: fit(G src, G dst) = G fit(src, dst) G^-1.
TEST(FitRigid, EquivariantUnderCommonTransform) {
  std::mt19937_64 rng(15);
  for (int k = 0; k < 50; ++k) {
    const PointSet3 src = random_points(rng, 9);
    PointSet3 dst = random_transform(rng).apply(src) + 0.05 * random_points(rng, 9);
    const auto g = random_transform(rng);
    const auto lhs = fit_rigid(g.apply(src), g.apply(dst));
    const auto rhs = g * fit_rigid(src, dst) * g.inverse();
    EXPECT_TRUE(lhs.is_approx(rhs, 1e-8));
  }
}

// Property: optimal residual never exceeds the identity's, and det(R) = +1 even for mirrored data.
TEST(FitRigid, OptimalityAndProperRotation) {
  std::mt19937_64 rng(16);
  for (int k = 0; k < 50; ++k) {
    const PointSet3 src = random_points(rng, 8);
    PointSet3 dst = random_points(rng, 8);
    if (k % 2 == 0) {
      dst = src;
      dst.row(0) *= -1.0;  // mirror image
    }
    const Eigen::VectorXd w = Eigen::VectorXd::Ones(8);
    const auto est = fit_rigid(src, dst, w);
    EXPECT_LE(rigid_residual(est, src, dst, w), rigid_residual(RigidTransform::identity(), src, dst, w) + 1e-12);
    EXPECT_NEAR(est.rotation().determinant(), 1.0, 1e-9);
  }
}

}  // namespace
}  // namespace objflow
