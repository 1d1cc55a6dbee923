#pragma once

#include <Eigen/Core>
#include <vector>

#include "repose/errors.hpp"
#include "repose/skeleton.hpp"

namespace repose {

// Per-joint score planes, row-major: values[(j * height + v) * width + u].
struct Heatmap {
  int joints = 0;
  int width = 0;
  int height = 0;
  std::vector<double> values;

  double& at(int j, int v, int u) {
    return values[(static_cast<std::size_t>(j) * height + v) * width + u];
  }
  double at(int j, int v, int u) const {
    return values[(static_cast<std::size_t>(j) * height + v) * width + u];
  }
  double plane_sum(int j) const;
  bool consistent() const {
    return joints >= 1 && width >= 1 && height >= 1 &&
           values.size() ==
               static_cast<std::size_t>(joints) * width * height;
  }
};

// Per joint: H'(r) = exp(alpha H(r)) / sum_r exp(alpha H(r)),
// computed with max-subtraction. Throws on NaN input.
Heatmap spatial_softmax(const Heatmap& hm, double alpha);

// Probability-weighted mean of cell coordinates (u, v), cell-center
// origin at (0, 0). Requires each plane to sum to 1 within 1e-3.
std::vector<Eigen::Vector2d> soft_argmax(const Heatmap& hm_normalized);

// Softmax + soft-argmax for a 17-joint map; confidence = normalized
// peak value. Set already_normalized to skip the softmax.
Pose2D keypoints_from_heatmaps(const Heatmap& hm, double alpha,
                               bool already_normalized = false,
                               long frame_index = 0,
                               const std::string& camera_id = {});

}  // namespace repose
