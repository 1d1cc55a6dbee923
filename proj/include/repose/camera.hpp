#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "repose/errors.hpp"
#include "repose/skeleton.hpp"

namespace repose {

struct CameraView {
  std::string id;
  Eigen::Matrix3d K = Eigen::Matrix3d::Identity();  // intrinsics
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();  // world -> camera
  Eigen::Vector3d t = Eigen::Vector3d::Zero();      // meters
  int width = 0;
  int height = 0;

  // Throws CalibrationError unless K is upper-triangular with positive
  // focal entries and R is a proper rotation (R^T R = I, det = +1).
  void validate() const;
};

enum class Axis { X, Y, Z };

struct EngineFrameConfig {
  Eigen::Vector3d rodrigues_axis = Eigen::Vector3d::UnitZ();
  double rodrigues_angle = 0.0;  // radians
  Eigen::Vector3d origin_offset = Eigen::Vector3d::Zero();
  Axis mirror_axis = Axis::Z;

  void validate() const;  // ConfigError if axis is not unit-norm
};

Eigen::Matrix<double, 3, 4> projection_matrix(const CameraView& cam);

// Pinhole projection; throws GeometryError for depth <= 0.
Eigen::Vector2d project(const CameraView& cam, const Eigen::Vector3d& point);

// R = I + sin(theta) K + (1 - cos(theta)) K^2.
// Throws GeometryError if the axis is not unit length (tol 1e-6).
Eigen::Matrix3d rodrigues_rotation(const Eigen::Vector3d& axis, double angle);

// Right-handed world -> left-handed engine frame: per joint
// p -> R_cfg * (M p) + offset with M negating the mirror axis.
Pose3D to_engine_frame(const Pose3D& pose, const EngineFrameConfig& cfg);

}  // namespace repose
