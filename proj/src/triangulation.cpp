#include "repose/triangulation.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace repose {

DltSystem assemble_dlt(const std::vector<CameraView>& cams,
                       const std::vector<JointObservation>& obs) {
  std::unordered_map<std::string, const CameraView*> by_id;
  for (const auto& cam : cams) by_id[cam.id] = &cam;

  int positive = 0;
  for (const auto& o : obs)
    if (o.weight > 0.0) ++positive;
  if (positive < 2)
    throw GeometryError("triangulation needs >= 2 positively weighted views");

  DltSystem sys;
  sys.A.resize(2 * static_cast<int>(obs.size()), 4);
  sys.row_weights.resize(2 * static_cast<int>(obs.size()));
  for (std::size_t i = 0; i < obs.size(); ++i) {
    auto it = by_id.find(obs[i].camera_id);
    if (it == by_id.end())
      throw GeometryError("unknown camera id: " + obs[i].camera_id);
    const auto P = projection_matrix(*it->second);
    sys.A.row(2 * i) = obs[i].uv.x() * P.row(2) - P.row(0);
    sys.A.row(2 * i + 1) = obs[i].uv.y() * P.row(2) - P.row(1);
    sys.row_weights[2 * i] = obs[i].weight;
    sys.row_weights[2 * i + 1] = obs[i].weight;
    sys.camera_ids.push_back(obs[i].camera_id);
  }
  return sys;
}

TriangulatedPoint triangulate_joint(const DltSystem& sys) {
  // Drop zero-weight rows so they cannot perturb the SVD.
  std::vector<int> rows;
  for (int r = 0; r < sys.A.rows(); ++r)
    if (sys.row_weights[r] > 0.0) rows.push_back(r);
  Eigen::MatrixXd wa(rows.size(), 4);
  for (std::size_t i = 0; i < rows.size(); ++i)
    wa.row(i) = sys.row_weights[rows[i]] * sys.A.row(rows[i]);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(wa, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smallest = sv[sv.size() - 1];
  // A two-dimensional (near-)nullspace means the viewpoints do not
  // pin down a unique point: either the two smallest values are
  // comparable, or the second-smallest has collapsed outright.
  if (sv.size() >= 2 &&
      (sv[sv.size() - 2] <= 1e-10 * sv[0] ||
       (sv[sv.size() - 2] > 0.0 && smallest / sv[sv.size() - 2] > 0.99)))
    throw GeometryError("degenerate camera geometry: solution not unique");

  Eigen::Vector4d h = svd.matrixV().col(3);
  if (std::abs(h[3]) < 1e-12)
    throw GeometryError("triangulated point at infinity");
  if (h[3] < 0.0) h = -h;
  return {h.head<3>() / h[3], smallest};
}

TriangulatedPose triangulate_pose(const std::vector<CameraView>& cams,
                                  const std::vector<Pose2D>& views) {
  if (views.size() < 2)
    throw GeometryError("triangulation needs >= 2 views");
  const long frame = views.front().frame_index;
  for (const auto& v : views)
    if (v.frame_index != frame)
      throw DataError("views are not synchronized on frame index");

  TriangulatedPose out;
  out.pose.frame_index = frame;
  for (int j = 0; j < kNumJoints; ++j) {
    std::vector<JointObservation> obs;
    for (const auto& v : views)
      obs.push_back({v.camera_id, v.joints[j], v.confidence[j]});
    const auto tri = triangulate_joint(assemble_dlt(cams, obs));
    out.pose.joints[j] = tri.point;
    out.pose.confidence[j] = std::clamp(std::exp(-tri.residual), 0.0, 1.0);
    out.residuals[j] = tri.residual;
  }
  return out;
}

}  // namespace repose
