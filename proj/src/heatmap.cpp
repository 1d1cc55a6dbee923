#include "repose/heatmap.hpp"

#include <algorithm>
#include <cmath>

namespace repose {

double Heatmap::plane_sum(int j) const {
  double s = 0.0;
  const std::size_t plane = static_cast<std::size_t>(width) * height;
  for (std::size_t i = 0; i < plane; ++i) s += values[j * plane + i];
  return s;
}

Heatmap spatial_softmax(const Heatmap& hm, double alpha) {
  if (!hm.consistent()) throw FormatError("inconsistent heatmap dimensions");
  if (!std::isfinite(alpha)) throw ConfigError("alpha must be finite");
  Heatmap out = hm;
  const std::size_t plane = static_cast<std::size_t>(hm.width) * hm.height;
  for (int j = 0; j < hm.joints; ++j) {
    double* p = out.values.data() + j * plane;
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < plane; ++i) {
      if (std::isnan(p[i])) throw FormatError("NaN heatmap value");
      peak = std::max(peak, alpha * p[i]);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < plane; ++i) {
      p[i] = std::exp(alpha * p[i] - peak);
      sum += p[i];
    }
    for (std::size_t i = 0; i < plane; ++i) p[i] /= sum;
  }
  return out;
}

std::vector<Eigen::Vector2d> soft_argmax(const Heatmap& hm) {
  if (!hm.consistent()) throw FormatError("inconsistent heatmap dimensions");
  std::vector<Eigen::Vector2d> out(hm.joints);
  for (int j = 0; j < hm.joints; ++j) {
    if (std::abs(hm.plane_sum(j) - 1.0) > 1e-3)
      throw FormatError("heatmap plane is not normalized");
    double u = 0.0, v = 0.0;
    for (int y = 0; y < hm.height; ++y)
      for (int x = 0; x < hm.width; ++x) {
        const double w = hm.at(j, y, x);
        u += w * x;
        v += w * y;
      }
    out[j] = {u, v};
  }
  return out;
}

Pose2D keypoints_from_heatmaps(const Heatmap& hm, double alpha,
                               bool already_normalized, long frame_index,
                               const std::string& camera_id) {
  if (hm.joints != kNumJoints)
    throw TopologyError("heatmap must carry 17 joint planes");
  const Heatmap norm = already_normalized ? hm : spatial_softmax(hm, alpha);
  const auto coords = soft_argmax(norm);
  Pose2D pose;
  pose.frame_index = frame_index;
  pose.camera_id = camera_id;
  const std::size_t plane = static_cast<std::size_t>(hm.width) * hm.height;
  for (int j = 0; j < kNumJoints; ++j) {
    pose.joints[j] = coords[j];
    const double* p = norm.values.data() + j * plane;
    pose.confidence[j] =
        std::clamp(*std::max_element(p, p + plane), 0.0, 1.0);
  }
  return pose;
}

}  // namespace repose
