#pragma once

#include <Eigen/Core>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "repose/skeleton.hpp"

namespace repose {

struct MuscleSpec {
  std::vector<int> joints;  // skeleton joint indices
  Eigen::Vector3d axis_weights = Eigen::Vector3d::Constant(1.0 / 3.0);
  std::optional<std::pair<double, double>> thresholds;  // (slow, intense)
};

using MuscleMap = std::map<std::string, MuscleSpec>;

// 12 major groups over anatomically adjacent joints.
MuscleMap default_muscle_map();

void validate_muscle_map(const MuscleMap& map);

enum class Intensity { Slow, Moderate, Intense };

struct IntensityLevel {
  Intensity level = Intensity::Slow;
  double speed = 0.0;
};

const char* level_name(Intensity level);   // "slow" / "moderate" / "intense"
const char* level_color(Intensity level);  // "blue" / "green" / "yellow"

// V = (cur - prev) / dt; throws ConfigError for dt <= 0.
Eigen::Vector3d joint_velocity(const Eigen::Vector3d& prev,
                               const Eigen::Vector3d& cur, double dt = 0.02);

// speed = w_x |v_x| + w_y |v_y| + w_z |v_z|
double speed(const Eigen::Vector3d& velocity,
             const Eigen::Vector3d& axis_weights);

// >= intense -> Intense, <= slow -> Slow, in between -> Moderate.
IntensityLevel classify(double speed_value, double slow_threshold = 0.08,
                        double intense_threshold = 0.2);

struct MuscleFrame {
  long frame_index = 0;
  std::map<std::string, IntensityLevel> muscles;
  std::vector<std::string> warnings;
};

// Per muscle: mean of associated joint speeds, then classified.
MuscleFrame muscle_levels(const Pose3D& prev_pose, const Pose3D& cur_pose,
                          const MuscleMap& map, double dt = 0.02);

}  // namespace repose
