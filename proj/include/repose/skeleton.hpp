#pragma once

#include <Eigen/Core>
#include <array>
#include <string>
#include <vector>

#include "repose/errors.hpp"

namespace repose {

inline constexpr int kNumJoints = 17;

// 17-joint topology, Human3.6M convention: pelvis root, right leg,
// left leg, spine/neck/head chain, left arm, right arm.
struct Skeleton {
  std::vector<std::string> joint_names;
  std::vector<int> parents;  // -1 for the root

  static Skeleton human36m();

  std::size_t size() const { return joint_names.size(); }
  int root() const;

  // Throws TopologyError unless: 17 joints, exactly one root,
  // parents form a tree (every joint reaches the root in <= 16 steps).
  void validate() const;
};

struct Pose3D {
  std::array<Eigen::Vector3d, kNumJoints> joints{};  // meters
  std::array<double, kNumJoints> confidence{};       // [0,1]
  long frame_index = 0;
  double timestamp = 0.0;  // seconds

  static Pose3D zero(long frame = 0, double ts = 0.0);
};

struct Pose2D {
  std::array<Eigen::Vector2d, kNumJoints> joints{};  // pixels
  std::array<double, kNumJoints> confidence{};       // [0,1]
  std::string camera_id;
  long frame_index = 0;
};

struct ValidationIssue {
  int joint;  // -1 when not joint-specific
  std::string what;
};

using ValidationReport = std::vector<ValidationIssue>;

// One length per non-root joint, indexed by child joint, meters.
// Root's slot is 0. Throws TopologyError if skel is not 17 joints.
std::array<double, kNumJoints> bone_lengths(const Pose3D& pose,
                                            const Skeleton& skel);

ValidationReport validate_pose(const Pose3D& pose);
ValidationReport validate_pose(const Pose2D& pose);

}  // namespace repose
