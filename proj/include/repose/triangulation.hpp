#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "repose/camera.hpp"
#include "repose/skeleton.hpp"

namespace repose {

struct JointObservation {
  std::string camera_id;
  Eigen::Vector2d uv;    // pixels
  double weight = 1.0;   // [0,1]
};

struct DltSystem {
  Eigen::MatrixXd A;            // 2C x 4, camera row pairs
  Eigen::VectorXd row_weights;  // 2C
  std::vector<std::string> camera_ids;
};

struct TriangulatedPoint {
  Eigen::Vector3d point;   // meters
  double residual = 0.0;   // smallest singular value of (w o A)
};

struct TriangulatedPose {
  Pose3D pose;
  std::array<double, kNumJoints> residuals{};
};

// Rows per camera c: u_c P_c[2] - P_c[0] and v_c P_c[2] - P_c[1],
// both carrying weight w_c. Throws GeometryError unless at least two
// observations have weight > 0.
DltSystem assemble_dlt(const std::vector<CameraView>& cams,
                       const std::vector<JointObservation>& obs);

// SVD solve of (w o A) y = 0; the point is the dehomogenized
// smallest-singular-value right singular vector.
TriangulatedPoint triangulate_joint(const DltSystem& sys);

// Per-joint DLT over all views; observation weight = 2D confidence.
// Pose3D confidence = exp(-residual) clamped to [0,1].
TriangulatedPose triangulate_pose(const std::vector<CameraView>& cams,
                                  const std::vector<Pose2D>& views);

}  // namespace repose
