#include <cmath>
#include <random>

#include "doctest.h"
#include "repose/heatmap.hpp"
#include "repose/synth.hpp"

using namespace repose;

namespace {

Heatmap blank(int joints, int w, int h, double fill = 0.0) {
  Heatmap hm;
  hm.joints = joints;
  hm.width = w;
  hm.height = h;
  hm.values.assign(static_cast<std::size_t>(joints) * w * h, fill);
  return hm;
}

}  // namespace

TEST_CASE("spatial softmax normalizes every plane") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  Heatmap hm = blank(3, 12, 9);
  for (auto& v : hm.values) v = nd(rng);
  const Heatmap out = spatial_softmax(hm, 30.0);
  for (int j = 0; j < 3; ++j)
    CHECK(out.plane_sum(j) == doctest::Approx(1.0).epsilon(1e-12));
  for (double v : out.values) CHECK(v > 0.0);
}

TEST_CASE("spatial softmax is invariant to a constant logit shift") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> nd;
  Heatmap a = blank(1, 16, 16);
  for (auto& v : a.values) v = nd(rng);
  Heatmap b = a;
  for (auto& v : b.values) v += 123.5;  // also stresses max-subtraction
  const Heatmap sa = spatial_softmax(a, 50.0);
  const Heatmap sb = spatial_softmax(b, 50.0);
  for (std::size_t i = 0; i < sa.values.size(); ++i)
    CHECK(sa.values[i] == doctest::Approx(sb.values[i]).epsilon(1e-9));
}

TEST_CASE("spatial softmax survives large logits via max-subtraction") {
  Heatmap hm = blank(1, 4, 4, 5000.0);
  hm.at(0, 1, 2) = 5001.0;
  const Heatmap out = spatial_softmax(hm, 1.0);
  CHECK(std::isfinite(out.at(0, 1, 2)));
  CHECK(out.plane_sum(0) == doctest::Approx(1.0));
}

TEST_CASE("spatial softmax rejects NaN input") {
  Heatmap hm = blank(1, 4, 4);
  hm.at(0, 0, 0) = std::nan("");
  CHECK_THROWS_AS(spatial_softmax(hm, 10.0), FormatError);
}

TEST_CASE("soft-argmax of a delta plane is the cell coordinate") {
  Heatmap hm = blank(2, 20, 15);
  hm.at(0, 7, 11) = 1.0;
  hm.at(1, 0, 0) = 1.0;
  const auto c = soft_argmax(hm);
  CHECK(c[0].x() == doctest::Approx(11.0));
  CHECK(c[0].y() == doctest::Approx(7.0));
  CHECK(c[1].norm() == doctest::Approx(0.0));
}

TEST_CASE("soft-argmax of a uniform plane is the grid center") {
  Heatmap hm = blank(1, 21, 11, 1.0 / (21.0 * 11.0));
  const auto c = soft_argmax(hm);
  CHECK(c[0].x() == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(c[0].y() == doctest::Approx(5.0).epsilon(1e-9));
}

TEST_CASE("soft-argmax requires normalized planes") {
  const Heatmap hm = blank(1, 8, 8, 1.0);  // sums to 64
  CHECK_THROWS_AS(soft_argmax(hm), FormatError);
}

TEST_CASE("rendered bumps decode to sub-0.01 px accuracy") {
  const double alpha = 100.0, sigma = 2.0;
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> pos(10.0, 50.0);
  Pose2D gt;
  for (int j = 0; j < kNumJoints; ++j) {
    gt.joints[j] = {pos(rng), pos(rng)};
    gt.confidence[j] = 1.0;
  }
  const Heatmap hm = render_heatmaps(gt, 64, 64, sigma, alpha);
  const Pose2D decoded = keypoints_from_heatmaps(hm, alpha);
  for (int j = 0; j < kNumJoints; ++j)
    CHECK((decoded.joints[j] - gt.joints[j]).norm() < 0.01);
}

TEST_CASE("decoding is equivariant to integer bump translation") {
  const double alpha = 100.0, sigma = 2.0;
  Pose2D gt;
  for (int j = 0; j < kNumJoints; ++j) {
    gt.joints[j] = {20.25, 30.75};
    gt.confidence[j] = 1.0;
  }
  Pose2D shifted = gt;
  for (auto& j : shifted.joints) j += Eigen::Vector2d(7, -4);
  const Pose2D a =
      keypoints_from_heatmaps(render_heatmaps(gt, 64, 64, sigma, alpha), alpha);
  const Pose2D b = keypoints_from_heatmaps(
      render_heatmaps(shifted, 64, 64, sigma, alpha), alpha);
  for (int j = 0; j < kNumJoints; ++j) {
    CHECK((b.joints[j] - a.joints[j] - Eigen::Vector2d(7, -4)).norm() < 1e-6);
  }
}

TEST_CASE("keypoint confidence is the normalized peak value") {
  Pose2D gt;
  for (int j = 0; j < kNumJoints; ++j) {
    gt.joints[j] = {32.0, 32.0};
    gt.confidence[j] = 1.0;
  }
  const Heatmap hm = render_heatmaps(gt, 64, 64, 2.0, 100.0);
  const Pose2D decoded = keypoints_from_heatmaps(hm, 100.0);
  for (int j = 0; j < kNumJoints; ++j) {
    CHECK(decoded.confidence[j] > 0.0);
    CHECK(decoded.confidence[j] <= 1.0);
  }
}

TEST_CASE("17-joint decoder rejects other plane counts") {
  const Heatmap hm = blank(3, 8, 8);
  CHECK_THROWS_AS(keypoints_from_heatmaps(hm, 10.0), TopologyError);
}
