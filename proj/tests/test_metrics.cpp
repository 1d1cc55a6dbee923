#include <Eigen/Geometry>
#include <Eigen/LU>
#include <random>

#include "doctest.h"
#include "repose/camera.hpp"
#include "repose/metrics.hpp"

using namespace repose;

namespace {

Pose3D random_pose(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Pose3D p = Pose3D::zero();
  for (auto& j : p.joints) j = Eigen::Vector3d(nd(rng), nd(rng), nd(rng));
  return p;
}

}  // namespace

TEST_CASE("a uniform (3,4,0) mm offset gives exactly 5 mm mpjpe") {
  std::mt19937_64 rng(31);
  const Pose3D gt = random_pose(rng);
  Pose3D pred = gt;
  for (auto& j : pred.joints) j += Eigen::Vector3d(0.003, 0.004, 0.0);
  CHECK(mpjpe(pred, gt) == doctest::Approx(5.0).epsilon(1e-9));
  CHECK(mpjpe(gt, gt) == 0.0);
}

TEST_CASE("procrustes recovers an applied similarity transform") {
  std::mt19937_64 rng(32);
  const Pose3D gt = random_pose(rng);
  const Eigen::Matrix3d R = rodrigues_rotation(
      Eigen::Vector3d(0.48, 0.6, 0.64).normalized(), 0.9);
  const double s = 1.7;
  const Eigen::Vector3d t(0.3, -1.2, 0.5);

  Pose3D pred = gt;
  // pred = R^-1 (gt - t) / s, so aligning pred onto gt must find (s, R, t)
  for (auto& j : pred.joints) j = R.transpose() * (j - t) / s;

  const auto align = procrustes_align(pred, gt);
  CHECK(align.scale == doctest::Approx(s).epsilon(1e-9));
  CHECK((align.rotation - R).norm() == doctest::Approx(0.0).epsilon(1e-9));
  CHECK((align.translation - t).norm() == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(p_mpjpe(pred, gt) < 1e-6);
}

TEST_CASE("procrustes always returns a proper rotation") {
  std::mt19937_64 rng(33);
  for (int i = 0; i < 20; ++i) {
    const Pose3D gt = random_pose(rng);
    Pose3D pred = random_pose(rng);
    pred.joints[0] = -pred.joints[0];  // encourage reflection solutions
    const auto align = procrustes_align(pred, gt);
    CHECK(align.rotation.determinant() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK((align.rotation.transpose() * align.rotation -
           Eigen::Matrix3d::Identity())
              .norm() < 1e-9);
  }
}

TEST_CASE("procrustes alignment never beats itself with the identity") {
  // the fitted transform minimizes the squared residual
  std::mt19937_64 rng(34);
  for (int i = 0; i < 20; ++i) {
    const Pose3D gt = random_pose(rng);
    const Pose3D pred = random_pose(rng);
    const auto align = procrustes_align(pred, gt);
    double fitted = 0.0, identity = 0.0;
    for (int j = 0; j < kNumJoints; ++j) {
      fitted += (align.aligned.joints[j] - gt.joints[j]).squaredNorm();
      identity += (pred.joints[j] - gt.joints[j]).squaredNorm();
    }
    CHECK(fitted <= identity + 1e-12);
  }
}

TEST_CASE("procrustes rejects zero-variance predictions") {
  std::mt19937_64 rng(35);
  const Pose3D gt = random_pose(rng);
  Pose3D collapsed = Pose3D::zero();
  for (auto& j : collapsed.joints) j = Eigen::Vector3d(1, 2, 3);
  CHECK_THROWS_AS(procrustes_align(collapsed, gt), GeometryError);
}

TEST_CASE("acceleration error ignores constant-velocity offsets") {
  std::mt19937_64 rng(36);
  std::vector<Pose3D> gt, pred;
  for (int t = 0; t < 10; ++t) {
    gt.push_back(random_pose(rng));
    Pose3D p = gt.back();
    // linear-in-time drift has zero second difference
    for (auto& j : p.joints) j += t * Eigen::Vector3d(0.01, -0.02, 0.005);
    pred.push_back(p);
  }
  CHECK(accel_error(pred, gt) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("acceleration error matches a hand-built discrepancy") {
  std::vector<Pose3D> gt(3, Pose3D::zero()), pred(3, Pose3D::zero());
  // single joint deviates by +2 mm at the middle frame only
  pred[1].joints[5][0] = 0.002;
  // second difference discrepancy at joint 5: |(0) - 2*(2mm) + (0)| = 4 mm
  CHECK(accel_error(pred, gt) ==
        doctest::Approx(4.0 / kNumJoints).epsilon(1e-9));
  CHECK_THROWS_AS(accel_error(pred, std::vector<Pose3D>(2, Pose3D::zero())),
                  DataError);
  CHECK_THROWS_AS(accel_error(std::vector<Pose3D>(2, Pose3D::zero()),
                              std::vector<Pose3D>(2, Pose3D::zero())),
                  DataError);
}

TEST_CASE("sequence evaluation groups by action and appends an average") {
  std::mt19937_64 rng(37);
  std::vector<Pose3D> gt, pred;
  std::vector<std::string> actions;
  for (int t = 0; t < 12; ++t) {
    gt.push_back(random_pose(rng));
    Pose3D p = gt.back();
    for (auto& j : p.joints) j += Eigen::Vector3d(0.001, 0, 0);
    pred.push_back(p);
    actions.push_back(t < 5 ? "walk" : "squat");
  }
  const auto report = evaluate_sequences(pred, gt, actions);
  REQUIRE(report.per_action.size() == 3);
  CHECK(report.per_action[0].frames + report.per_action[1].frames == 12);
  CHECK(report.per_action.back().action == "Avg");
  CHECK(report.per_action.back().frames == 12);
  CHECK(report.mean_mpjpe_mm == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(report.per_frame_mpjpe_mm.size() == 12);
}
