#include "repose/skeleton.hpp"

#include <cmath>

namespace repose {

Skeleton Skeleton::human36m() {
  Skeleton s;
  s.joint_names = {
      "pelvis",        "right_hip",   "right_knee", "right_ankle",
      "left_hip",      "left_knee",   "left_ankle", "spine",
      "thorax",        "neck",        "head",       "left_shoulder",
      "left_elbow",    "left_wrist",  "right_shoulder",
      "right_elbow",   "right_wrist"};
  s.parents = {-1, 0, 1, 2, 0, 4, 5, 0, 7, 8, 9, 8, 11, 12, 8, 14, 15};
  return s;
}

int Skeleton::root() const {
  for (std::size_t i = 0; i < parents.size(); ++i)
    if (parents[i] < 0) return static_cast<int>(i);
  return -1;
}

void Skeleton::validate() const {
  if (joint_names.size() != kNumJoints || parents.size() != kNumJoints)
    throw TopologyError("skeleton must have exactly 17 joints");
  int roots = 0;
  for (int p : parents)
    if (p < 0) ++roots;
  if (roots != 1) throw TopologyError("skeleton must have exactly one root");
  for (int j = 0; j < kNumJoints; ++j) {
    int cur = j;
    int steps = 0;
    while (parents[cur] >= 0) {
      if (parents[cur] >= kNumJoints)
        throw TopologyError("parent index out of range");
      cur = parents[cur];
      if (++steps > kNumJoints)
        throw TopologyError("parent chain contains a cycle");
    }
  }
}

Pose3D Pose3D::zero(long frame, double ts) {
  Pose3D p;
  for (auto& j : p.joints) j.setZero();
  p.confidence.fill(1.0);
  p.frame_index = frame;
  p.timestamp = ts;
  return p;
}

std::array<double, kNumJoints> bone_lengths(const Pose3D& pose,
                                            const Skeleton& skel) {
  skel.validate();
  std::array<double, kNumJoints> out{};
  for (int j = 0; j < kNumJoints; ++j) {
    int p = skel.parents[j];
    out[j] = p < 0 ? 0.0 : (pose.joints[j] - pose.joints[p]).norm();
  }
  return out;
}

namespace {

template <typename Pose, int Dims>
ValidationReport validate_common(const Pose& pose) {
  ValidationReport report;
  for (int j = 0; j < kNumJoints; ++j) {
    for (int d = 0; d < Dims; ++d) {
      if (!std::isfinite(pose.joints[j][d])) {
        report.push_back({j, "non-finite coordinate"});
        break;
      }
    }
    double c = pose.confidence[j];
    if (!(c >= 0.0 && c <= 1.0))
      report.push_back({j, "confidence out of [0,1]"});
  }
  return report;
}

}  // namespace

ValidationReport validate_pose(const Pose3D& pose) {
  return validate_common<Pose3D, 3>(pose);
}

ValidationReport validate_pose(const Pose2D& pose) {
  return validate_common<Pose2D, 2>(pose);
}

}  // namespace repose
