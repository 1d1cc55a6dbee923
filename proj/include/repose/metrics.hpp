#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "repose/skeleton.hpp"

namespace repose {

// Mean per-joint position error, millimeters (inputs are meters).
double mpjpe(const Pose3D& pred, const Pose3D& gt);

struct SimilarityAlignment {
  Pose3D aligned;
  double scale = 1.0;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

// Least-squares similarity transform (s, R, tau) minimizing
// sum ||s R pred_i + tau - gt_i||^2, with the det(-1) reflection fix.
// Throws GeometryError when pred has zero variance.
SimilarityAlignment procrustes_align(const Pose3D& pred, const Pose3D& gt);

// Protocol 2: MPJPE after Procrustes alignment, millimeters.
double p_mpjpe(const Pose3D& pred, const Pose3D& gt);

// Mean norm of the second-difference discrepancy, mm/frame^2.
double accel_error(const std::vector<Pose3D>& pred,
                   const std::vector<Pose3D>& gt);

struct EvalRow {
  std::string action;
  double mpjpe_mm = 0.0;
  double p_mpjpe_mm = 0.0;
  long frames = 0;
};

struct EvalReport {
  std::vector<double> per_frame_mpjpe_mm;
  std::vector<double> per_frame_p_mpjpe_mm;
  double mean_mpjpe_mm = 0.0;
  double mean_p_mpjpe_mm = 0.0;
  double accel_error_mm = 0.0;
  std::vector<EvalRow> per_action;  // plus a final "Avg" row
};

EvalReport evaluate_sequences(
    const std::vector<Pose3D>& pred, const std::vector<Pose3D>& gt,
    const std::vector<std::string>& action_labels = {});

}  // namespace repose
