#include "repose/muscle.hpp"

#include <cmath>

namespace repose {

MuscleMap default_muscle_map() {
  auto spec = [](std::vector<int> joints) {
    MuscleSpec s;
    s.joints = std::move(joints);
    return s;
  };
  return {
      {"left_biceps", spec({11, 12, 13})},
      {"left_triceps", spec({11, 12, 13})},
      {"right_biceps", spec({14, 15, 16})},
      {"right_triceps", spec({14, 15, 16})},
      {"left_deltoid", spec({8, 11, 12})},
      {"right_deltoid", spec({8, 14, 15})},
      {"left_quadriceps", spec({4, 5, 6})},
      {"right_quadriceps", spec({1, 2, 3})},
      {"left_hamstring", spec({4, 5})},
      {"right_hamstring", spec({1, 2})},
      {"left_calf", spec({5, 6})},
      {"right_calf", spec({2, 3})},
  };
}

void validate_muscle_map(const MuscleMap& map) {
  for (const auto& [name, spec] : map) {
    if (spec.joints.empty())
      throw ConfigError("muscle '" + name + "' has no joints");
    for (int j : spec.joints)
      if (j < 0 || j >= kNumJoints)
        throw ConfigError("muscle '" + name + "' has a bad joint index");
    if ((spec.axis_weights.array() < 0.0).any())
      throw ConfigError("muscle '" + name + "' has negative axis weights");
    if (std::abs(spec.axis_weights.sum() - 1.0) > 1e-6)
      throw ConfigError("muscle '" + name + "' axis weights must sum to 1");
    if (spec.thresholds) {
      const auto& [slow, intense] = *spec.thresholds;
      if (!(0.0 < slow && slow < intense))
        throw ConfigError("muscle '" + name + "' has inverted thresholds");
    }
  }
}

const char* level_name(Intensity level) {
  switch (level) {
    case Intensity::Slow: return "slow";
    case Intensity::Moderate: return "moderate";
    case Intensity::Intense: return "intense";
  }
  return "?";
}

const char* level_color(Intensity level) {
  switch (level) {
    case Intensity::Slow: return "blue";
    case Intensity::Moderate: return "green";
    case Intensity::Intense: return "yellow";
  }
  return "?";
}

Eigen::Vector3d joint_velocity(const Eigen::Vector3d& prev,
                               const Eigen::Vector3d& cur, double dt) {
  if (dt <= 0.0) throw ConfigError("frame time step must be positive");
  return (cur - prev) / dt;
}

double speed(const Eigen::Vector3d& velocity,
             const Eigen::Vector3d& axis_weights) {
  if ((axis_weights.array() < 0.0).any())
    throw ConfigError("axis weights must be non-negative");
  return axis_weights.dot(velocity.cwiseAbs());
}

IntensityLevel classify(double speed_value, double slow_threshold,
                        double intense_threshold) {
  if (!(0.0 < slow_threshold && slow_threshold < intense_threshold))
    throw ConfigError("thresholds must satisfy 0 < slow < intense");
  IntensityLevel out;
  out.speed = speed_value;
  if (speed_value >= intense_threshold)
    out.level = Intensity::Intense;
  else if (speed_value <= slow_threshold)
    out.level = Intensity::Slow;
  else
    out.level = Intensity::Moderate;
  return out;
}

MuscleFrame muscle_levels(const Pose3D& prev_pose, const Pose3D& cur_pose,
                          const MuscleMap& map, double dt) {
  validate_muscle_map(map);
  if (dt <= 0.0) throw ConfigError("frame time step must be positive");
  MuscleFrame out;
  out.frame_index = cur_pose.frame_index;
  const double ts_dt = cur_pose.timestamp - prev_pose.timestamp;
  if (ts_dt > 0.0 && std::abs(ts_dt - dt) > 0.1 * dt)
    out.warnings.push_back("frame timestamps disagree with dt by > 10%");
  for (const auto& [name, spec] : map) {
    double mean_speed = 0.0;
    for (int j : spec.joints) {
      const auto v =
          joint_velocity(prev_pose.joints[j], cur_pose.joints[j], dt);
      mean_speed += speed(v, spec.axis_weights);
    }
    mean_speed /= static_cast<double>(spec.joints.size());
    const auto [slow, intense] =
        spec.thresholds.value_or(std::make_pair(0.08, 0.2));
    out.muscles[name] = classify(mean_speed, slow, intense);
  }
  return out;
}

}  // namespace repose
