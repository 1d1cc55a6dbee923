#include <Eigen/Geometry>
#include <random>

#include "doctest.h"
#include "repose/camera.hpp"

using namespace repose;

namespace {

CameraView simple_camera() {
  CameraView cam;
  cam.id = "cam0";
  cam.K << 1000, 0, 500, 0, 1000, 400, 0, 0, 1;
  cam.t = Eigen::Vector3d(0, 0, 4);
  cam.width = 1000;
  cam.height = 800;
  return cam;
}

}  // namespace

TEST_CASE("projection matrix is K [R | t]") {
  CameraView cam = simple_camera();
  cam.R = rodrigues_rotation(Eigen::Vector3d::UnitY(), 0.3);
  const auto P = projection_matrix(cam);
  Eigen::Matrix<double, 3, 4> rt;
  rt.leftCols<3>() = cam.R;
  rt.col(3) = cam.t;
  CHECK((P - cam.K * rt).norm() == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("projection divides by depth") {
  const CameraView cam = simple_camera();
  // point (0.5, -0.25, -2) in front of the camera at depth 2
  const Eigen::Vector2d uv = project(cam, {0.5, -0.25, -2.0});
  CHECK(uv.x() == doctest::Approx(500 + 1000 * 0.5 / 2.0).epsilon(1e-12));
  CHECK(uv.y() == doctest::Approx(400 + 1000 * -0.25 / 2.0).epsilon(1e-12));
}

TEST_CASE("projection rejects points at or behind the camera") {
  const CameraView cam = simple_camera();
  CHECK_THROWS_AS(project(cam, {0, 0, -4.0}), GeometryError);  // depth 0
  CHECK_THROWS_AS(project(cam, {0, 0, -5.0}), GeometryError);  // behind
}

TEST_CASE("rodrigues matches the quaternion rotation") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  for (int i = 0; i < 50; ++i) {
    Eigen::Vector3d axis(nd(rng), nd(rng), nd(rng));
    axis.normalize();
    const double angle = 3.0 * nd(rng);
    const Eigen::Matrix3d expected =
        Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis)).toRotationMatrix();
    const Eigen::Matrix3d got = rodrigues_rotation(axis, angle);
    CHECK((got - expected).norm() == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("rodrigues requires a unit axis") {
  CHECK_THROWS_AS(rodrigues_rotation({1, 1, 0}, 0.5), GeometryError);
  CHECK_THROWS_AS(rodrigues_rotation({0, 0, 0}, 0.5), GeometryError);
}

TEST_CASE("camera validation") {
  CameraView cam = simple_camera();
  cam.validate();

  SUBCASE("negative focal length") {
    cam.K(0, 0) = -1000;
    CHECK_THROWS_AS(cam.validate(), CalibrationError);
  }
  SUBCASE("lower-triangular garbage in K") {
    cam.K(1, 0) = 2.0;
    CHECK_THROWS_AS(cam.validate(), CalibrationError);
  }
  SUBCASE("non-orthonormal R") {
    cam.R(0, 0) = 2.0;
    CHECK_THROWS_AS(cam.validate(), CalibrationError);
  }
  SUBCASE("reflection R") {
    cam.R = Eigen::Vector3d(1, 1, -1).asDiagonal();
    CHECK_THROWS_AS(cam.validate(), CalibrationError);
  }
}

TEST_CASE("engine frame conversion mirrors, rotates, then offsets") {
  EngineFrameConfig cfg;
  cfg.mirror_axis = Axis::Z;
  cfg.rodrigues_axis = Eigen::Vector3d::UnitY();
  cfg.rodrigues_angle = M_PI / 2;
  cfg.origin_offset = Eigen::Vector3d(1, 2, 3);
  cfg.validate();

  Pose3D pose = Pose3D::zero();
  pose.joints[0] = Eigen::Vector3d(0.5, 0.25, 0.75);
  const Pose3D out = to_engine_frame(pose, cfg);
  // mirror z: (0.5, 0.25, -0.75); rotate +90deg about y: (x,z)->(-z... )
  const Eigen::Vector3d expected =
      rodrigues_rotation(Eigen::Vector3d::UnitY(), M_PI / 2) *
          Eigen::Vector3d(0.5, 0.25, -0.75) +
      cfg.origin_offset;
  CHECK((out.joints[0] - expected).norm() ==
        doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("engine frame conversion preserves pairwise distances") {
  EngineFrameConfig cfg;
  cfg.mirror_axis = Axis::X;
  cfg.rodrigues_axis = Eigen::Vector3d(0, 0.6, 0.8);
  cfg.rodrigues_angle = 1.1;
  cfg.origin_offset = Eigen::Vector3d(-2, 0, 5);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  Pose3D pose = Pose3D::zero();
  for (auto& j : pose.joints) j = Eigen::Vector3d(nd(rng), nd(rng), nd(rng));
  const Pose3D out = to_engine_frame(pose, cfg);
  for (int a = 0; a < kNumJoints; ++a)
    for (int b = a + 1; b < kNumJoints; ++b)
      CHECK((out.joints[a] - out.joints[b]).norm() ==
            doctest::Approx((pose.joints[a] - pose.joints[b]).norm())
                .epsilon(1e-12));
}

TEST_CASE("engine frame config rejects a non-unit rotation axis") {
  EngineFrameConfig cfg;
  cfg.rodrigues_axis = Eigen::Vector3d(1, 1, 1);
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
