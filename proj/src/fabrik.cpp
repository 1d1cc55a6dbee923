#include "repose/fabrik.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>

namespace repose {

namespace {

constexpr double kCoincidentEps = 1e-12;

// Guarded direction between two points; coincident points are
// deterministically perturbed along +x.
Eigen::Vector3d direction(const Eigen::Vector3d& from,
                          const Eigen::Vector3d& to) {
  Eigen::Vector3d d = to - from;
  double r = d.norm();
  if (r < kCoincidentEps) {
    d = Eigen::Vector3d(1e-9, 0, 0);
    r = d.norm();
  }
  return d / r;
}

// Clamp the angle at interior joint i between segments
// (i-1 -> i) and (i -> i+1) to max_angle, rotating p_{i+1}.
void clamp_cone(std::vector<Eigen::Vector3d>& p,
                const std::vector<double>& lengths,
                const std::vector<double>& max_angles) {
  for (std::size_t i = 1; i + 1 < p.size(); ++i) {
    const double limit = max_angles[i - 1];
    const Eigen::Vector3d prev = direction(p[i - 1], p[i]);
    const Eigen::Vector3d cur = direction(p[i], p[i + 1]);
    const double angle =
        std::acos(std::clamp(prev.dot(cur), -1.0, 1.0));
    if (angle <= limit) continue;
    // rotate cur toward prev inside the cone, in their common plane
    Eigen::Vector3d axis = prev.cross(cur);
    Eigen::Vector3d ortho;
    if (axis.norm() < kCoincidentEps) {
      ortho = prev.unitOrthogonal();
    } else {
      ortho = (cur - prev * prev.dot(cur)).normalized();
    }
    const Eigen::Vector3d clamped =
        std::cos(limit) * prev + std::sin(limit) * ortho;
    p[i + 1] = p[i] + lengths[i] * clamped;
  }
}

}  // namespace

Chain Chain::from_positions(const std::vector<Eigen::Vector3d>& pos) {
  Chain c;
  c.positions = pos;
  for (std::size_t i = 0; i + 1 < pos.size(); ++i)
    c.lengths.push_back((pos[i + 1] - pos[i]).norm());
  if (!pos.empty()) c.root_anchor = pos.front();
  c.validate();
  return c;
}

void Chain::validate() const {
  if (positions.size() < 2) throw GeometryError("chain needs >= 2 joints");
  if (lengths.size() != positions.size() - 1)
    throw GeometryError("chain lengths/positions mismatch");
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    if (lengths[i] <= 0.0) throw GeometryError("chain segment length <= 0");
    const double actual = (positions[i + 1] - positions[i]).norm();
    if (std::abs(actual - lengths[i]) > 1e-9 * std::max(1.0, lengths[i]))
      throw GeometryError("rest pose does not match segment lengths");
  }
  if (max_angles && max_angles->size() != positions.size() - 2)
    throw GeometryError("chain max_angles size mismatch");
}

std::pair<bool, double> reachable(const Chain& chain,
                                  const Eigen::Vector3d& target) {
  chain.validate();
  double total = 0.0;
  for (double d : chain.lengths) total += d;
  const double dist = (chain.positions.front() - target).norm();
  return {dist <= total, dist};
}

std::vector<Eigen::Vector3d> stretch_toward(const Chain& chain,
                                            const Eigen::Vector3d& target) {
  chain.validate();
  std::vector<Eigen::Vector3d> p = chain.positions;
  p[0] = chain.root_anchor;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    const double r = (target - p[i]).norm();
    if (r < kCoincidentEps)
      throw GeometryError("unreachable target coincides with a joint");
    const double lambda = chain.lengths[i] / r;
    p[i + 1] = (1.0 - lambda) * p[i] + lambda * target;
  }
  return p;
}

void forward_reach(std::vector<Eigen::Vector3d>& positions,
                   const std::vector<double>& lengths,
                   const Eigen::Vector3d& target) {
  const std::size_t n = positions.size();
  positions[n - 1] = target;
  for (std::size_t i = n - 1; i-- > 0;)
    positions[i] =
        positions[i + 1] + lengths[i] * direction(positions[i + 1], positions[i]);
}

void backward_reach(std::vector<Eigen::Vector3d>& positions,
                    const std::vector<double>& lengths,
                    const Eigen::Vector3d& root_anchor) {
  positions[0] = root_anchor;
  for (std::size_t i = 0; i + 1 < positions.size(); ++i)
    positions[i + 1] =
        positions[i] + lengths[i] * direction(positions[i], positions[i + 1]);
}

IkSolution solve(const Chain& chain, const Eigen::Vector3d& target,
                 double tol, int max_iter) {
  chain.validate();
  IkSolution sol;
  auto [ok, dist] = reachable(chain, target);
  if (!ok) {
    sol.positions = stretch_toward(chain, target);
    sol.status = IkStatus::Unreachable;
    sol.error = (sol.positions.back() - target).norm();
    return sol;
  }
  sol.positions = chain.positions;
  backward_reach(sol.positions, chain.lengths, chain.root_anchor);
  sol.error = (sol.positions.back() - target).norm();
  while (sol.error > tol && sol.iterations < max_iter) {
    forward_reach(sol.positions, chain.lengths, target);
    if (chain.max_angles) clamp_cone(sol.positions, chain.lengths, *chain.max_angles);
    backward_reach(sol.positions, chain.lengths, chain.root_anchor);
    if (chain.max_angles) clamp_cone(sol.positions, chain.lengths, *chain.max_angles);
    ++sol.iterations;
    sol.error = (sol.positions.back() - target).norm();
  }
  sol.status = sol.error <= tol ? IkStatus::Reached : IkStatus::MaxIterations;
  return sol;
}

Rig Rig::default_rig() {
  Rig rig;
  rig.chains = {
      {"spine", {0, 7, 8, 9, 10}, std::nullopt},
      {"left_arm", {8, 11, 12, 13}, std::nullopt},
      {"right_arm", {8, 14, 15, 16}, std::nullopt},
      {"left_leg", {0, 4, 5, 6}, std::nullopt},
      {"right_leg", {0, 1, 2, 3}, std::nullopt},
  };
  return rig;
}

}  // namespace repose
