#include <random>

#include "doctest.h"
#include "repose/synth.hpp"
#include "repose/triangulation.hpp"

using namespace repose;

namespace {

std::vector<CameraView> test_rig(int n = 3) {
  return make_rig(n, 3.0, 1.2, 1000.0, 1000, 1000);
}

}  // namespace

TEST_CASE("dlt system rows follow the u P2 - P0 / v P2 - P1 pattern") {
  const auto cams = test_rig(2);
  std::vector<JointObservation> obs;
  const Eigen::Vector3d point(0.2, 0.9, -0.1);
  for (const auto& cam : cams)
    obs.push_back({cam.id, project(cam, point), 0.8});
  const DltSystem sys = assemble_dlt(cams, obs);
  REQUIRE(sys.A.rows() == 4);
  for (int c = 0; c < 2; ++c) {
    const auto P = projection_matrix(cams[c]);
    const Eigen::RowVector4d row_u = obs[c].uv.x() * P.row(2) - P.row(0);
    const Eigen::RowVector4d row_v = obs[c].uv.y() * P.row(2) - P.row(1);
    CHECK((sys.A.row(2 * c) - row_u).norm() ==
          doctest::Approx(0.0).epsilon(1e-12));
    CHECK((sys.A.row(2 * c + 1) - row_v).norm() ==
          doctest::Approx(0.0).epsilon(1e-12));
    CHECK(sys.row_weights[2 * c] == 0.8);
    CHECK(sys.row_weights[2 * c + 1] == 0.8);
  }
}

TEST_CASE("triangulation inverts exact projection") {
  const auto cams = test_rig(4);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> coord(-0.6, 0.6);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Vector3d point(coord(rng), coord(rng) + 1.0, coord(rng));
    std::vector<JointObservation> obs;
    for (const auto& cam : cams)
      obs.push_back({cam.id, project(cam, point), 1.0});
    const auto result = triangulate_joint(assemble_dlt(cams, obs));
    CHECK((result.point - point).norm() < 1e-6);
    CHECK(result.residual < 1e-6);
  }
}

TEST_CASE("two cameras are the minimum") {
  const auto cams = test_rig(3);
  const Eigen::Vector3d point(0.1, 1.1, 0.2);

  std::vector<JointObservation> obs;
  for (const auto& cam : cams)
    obs.push_back({cam.id, project(cam, point), 0.0});
  obs[0].weight = 1.0;
  CHECK_THROWS_AS(assemble_dlt(cams, obs), GeometryError);

  obs[1].weight = 1.0;  // second positive weight makes it solvable
  const auto result = triangulate_joint(assemble_dlt(cams, obs));
  CHECK((result.point - point).norm() < 1e-6);
}

TEST_CASE("zero-weight cameras do not influence the solution") {
  const auto cams = test_rig(3);
  const Eigen::Vector3d point(0.3, 0.8, -0.2);
  std::vector<JointObservation> obs;
  for (const auto& cam : cams)
    obs.push_back({cam.id, project(cam, point), 1.0});
  obs[2].uv = {12.0, 987.0};  // wildly wrong
  obs[2].weight = 0.0;        // but ignored
  const auto result = triangulate_joint(assemble_dlt(cams, obs));
  CHECK((result.point - point).norm() < 1e-6);
}

TEST_CASE("low-weight noisy views pull the solution less") {
  const auto cams = test_rig(4);
  const Eigen::Vector3d point(0.0, 1.0, 0.0);
  auto solve_with = [&](double bad_weight) {
    std::vector<JointObservation> obs;
    for (const auto& cam : cams)
      obs.push_back({cam.id, project(cam, point), 1.0});
    obs[3].uv += Eigen::Vector2d(25.0, -18.0);
    obs[3].weight = bad_weight;
    return triangulate_joint(assemble_dlt(cams, obs)).point;
  };
  const double err_low = (solve_with(0.05) - point).norm();
  const double err_high = (solve_with(1.0) - point).norm();
  CHECK(err_low < err_high);
}

TEST_CASE("near-identical viewpoints are rejected as degenerate") {
  auto cams = test_rig(2);
  cams[1] = cams[0];
  cams[1].id = "cam1";
  const Eigen::Vector3d point(0.1, 1.0, 0.1);
  std::vector<JointObservation> obs;
  for (const auto& cam : cams)
    obs.push_back({cam.id, project(cam, point), 1.0});
  CHECK_THROWS_AS(triangulate_joint(assemble_dlt(cams, obs)), GeometryError);
}

TEST_CASE("pose triangulation checks frame alignment") {
  const auto cams = test_rig(2);
  std::vector<Pose2D> views(2);
  views[0].camera_id = cams[0].id;
  views[1].camera_id = cams[1].id;
  views[0].frame_index = 3;
  views[1].frame_index = 4;
  views[0].confidence.fill(1.0);
  views[1].confidence.fill(1.0);
  CHECK_THROWS_AS(triangulate_pose(cams, views), DataError);
}

TEST_CASE("pose triangulation recovers a full synthetic pose") {
  const auto cams = test_rig(4);
  const auto motion = synth_motion(Skeleton::human36m(), 0.2, 50.0);
  SynthScene scene;
  scene.cameras = cams;
  scene.gt = motion;
  const auto obs = observe(scene);
  std::vector<Pose2D> views;
  for (const auto& stream : obs.per_camera) views.push_back(stream[3]);
  const auto tri = triangulate_pose(cams, views);
  for (int j = 0; j < kNumJoints; ++j) {
    CHECK((tri.pose.joints[j] - motion[3].joints[j]).norm() < 1e-6);
    CHECK(tri.pose.confidence[j] > 0.99);
    CHECK(tri.residuals[j] < 1e-6);
  }
  CHECK(tri.pose.frame_index == 3);
}
