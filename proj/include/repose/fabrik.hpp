#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "repose/errors.hpp"

namespace repose {

struct Chain {
  std::vector<Eigen::Vector3d> positions;  // p_1..p_n, meters
  std::vector<double> lengths;             // d_1..d_{n-1}
  Eigen::Vector3d root_anchor = Eigen::Vector3d::Zero();
  // Optional per-joint cone limit (radians) between consecutive
  // segments, indexed by interior joint (size n-2 when present).
  std::optional<std::vector<double>> max_angles;

  static Chain from_positions(const std::vector<Eigen::Vector3d>& pos);
  void validate() const;  // GeometryError on inconsistent rest pose
};

enum class IkStatus { Reached, Unreachable, MaxIterations };

struct IkSolution {
  std::vector<Eigen::Vector3d> positions;
  int iterations = 0;
  double error = 0.0;  // |p_n - target|
  IkStatus status = IkStatus::Reached;
};

// reachable iff |p_1 - t| <= sum d_i
std::pair<bool, double> reachable(const Chain& chain,
                                  const Eigen::Vector3d& target);

// Lays the chain collinearly from the root toward an unreachable target.
std::vector<Eigen::Vector3d> stretch_toward(const Chain& chain,
                                            const Eigen::Vector3d& target);

// Half passes; both preserve segment lengths exactly by construction.
void forward_reach(std::vector<Eigen::Vector3d>& positions,
                   const std::vector<double>& lengths,
                   const Eigen::Vector3d& target);
void backward_reach(std::vector<Eigen::Vector3d>& positions,
                    const std::vector<double>& lengths,
                    const Eigen::Vector3d& root_anchor);

IkSolution solve(const Chain& chain, const Eigen::Vector3d& target,
                 double tol = 0.01, int max_iter = 20);

// A full-body rig: named chains over skeleton joint indices, solved
// root-outward, each anchored at its already-solved parent joint.
struct RigChain {
  std::string name;
  std::vector<int> joints;  // indices into the 17-joint pose
  std::optional<std::vector<double>> max_angles;
};

struct Rig {
  std::vector<RigChain> chains;
  static Rig default_rig();  // spine + two arms + two legs
};

}  // namespace repose
