#include "repose/camera.hpp"

#include <Eigen/LU>
#include <cmath>

namespace repose {

void CameraView::validate() const {
  if (K(1, 0) != 0.0 || K(2, 0) != 0.0 || K(2, 1) != 0.0)
    throw CalibrationError("K must be upper-triangular: camera " + id);
  if (K(0, 0) <= 0.0 || K(1, 1) <= 0.0)
    throw CalibrationError("K must have positive focal entries: camera " + id);
  if ((R.transpose() * R - Eigen::Matrix3d::Identity()).norm() > 1e-9)
    throw CalibrationError("R is not orthonormal: camera " + id);
  if (R.determinant() < 0.0)
    throw CalibrationError("R must have det +1: camera " + id);
}

void EngineFrameConfig::validate() const {
  if (std::abs(rodrigues_axis.norm() - 1.0) > 1e-9)
    throw ConfigError("engine-frame rodrigues axis must be unit length");
}

Eigen::Matrix<double, 3, 4> projection_matrix(const CameraView& cam) {
  cam.validate();
  Eigen::Matrix<double, 3, 4> Rt;
  Rt.leftCols<3>() = cam.R;
  Rt.col(3) = cam.t;
  return cam.K * Rt;
}

Eigen::Vector2d project(const CameraView& cam, const Eigen::Vector3d& point) {
  const Eigen::Vector3d p = cam.K * (cam.R * point + cam.t);
  if (p.z() <= 0.0)
    throw GeometryError("point behind camera " + cam.id);
  return {p.x() / p.z(), p.y() / p.z()};
}

Eigen::Matrix3d rodrigues_rotation(const Eigen::Vector3d& axis, double angle) {
  if (std::abs(axis.norm() - 1.0) > 1e-6)
    throw GeometryError("rotation axis must be unit length");
  Eigen::Matrix3d K;
  K << 0, -axis.z(), axis.y(),
       axis.z(), 0, -axis.x(),
       -axis.y(), axis.x(), 0;
  return Eigen::Matrix3d::Identity() + std::sin(angle) * K +
         (1.0 - std::cos(angle)) * (K * K);
}

Pose3D to_engine_frame(const Pose3D& pose, const EngineFrameConfig& cfg) {
  cfg.validate();
  Eigen::Vector3d mirror = Eigen::Vector3d::Ones();
  mirror[static_cast<int>(cfg.mirror_axis)] = -1.0;
  const Eigen::Matrix3d R =
      rodrigues_rotation(cfg.rodrigues_axis, cfg.rodrigues_angle);
  Pose3D out = pose;
  for (auto& j : out.joints)
    j = R * (mirror.asDiagonal() * j) + cfg.origin_offset;
  return out;
}

}  // namespace repose
