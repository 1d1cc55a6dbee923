#include "repose/metrics.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <cmath>
#include <map>

namespace repose {

double mpjpe(const Pose3D& pred, const Pose3D& gt) {
  double sum = 0.0;
  for (int j = 0; j < kNumJoints; ++j)
    sum += (pred.joints[j] - gt.joints[j]).norm();
  return sum / kNumJoints * 1000.0;
}

SimilarityAlignment procrustes_align(const Pose3D& pred, const Pose3D& gt) {
  Eigen::Matrix<double, 3, kNumJoints> X, Y;
  for (int j = 0; j < kNumJoints; ++j) {
    X.col(j) = pred.joints[j];
    Y.col(j) = gt.joints[j];
  }
  const Eigen::Vector3d mx = X.rowwise().mean();
  const Eigen::Vector3d my = Y.rowwise().mean();
  X.colwise() -= mx;
  Y.colwise() -= my;

  const double var_x = X.squaredNorm();
  if (var_x < 1e-18)
    throw GeometryError("procrustes: prediction has zero variance");

  const Eigen::Matrix3d cov = Y * X.transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d d = Eigen::Vector3d::Ones();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0)
    d[2] = -1.0;  // flip the smallest-singular-value axis

  SimilarityAlignment out;
  out.rotation = svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();
  out.scale = svd.singularValues().dot(d) / var_x;
  out.translation = my - out.scale * out.rotation * mx;
  out.aligned = pred;
  for (int j = 0; j < kNumJoints; ++j)
    out.aligned.joints[j] =
        out.scale * out.rotation * pred.joints[j] + out.translation;
  return out;
}

double p_mpjpe(const Pose3D& pred, const Pose3D& gt) {
  return mpjpe(procrustes_align(pred, gt).aligned, gt);
}

double accel_error(const std::vector<Pose3D>& pred,
                   const std::vector<Pose3D>& gt) {
  if (pred.size() != gt.size()) throw DataError("sequence length mismatch");
  if (pred.size() < 3) throw DataError("accel_error needs >= 3 frames");
  double sum = 0.0;
  long count = 0;
  for (std::size_t t = 1; t + 1 < pred.size(); ++t) {
    for (int j = 0; j < kNumJoints; ++j) {
      const Eigen::Vector3d ap = pred[t + 1].joints[j] -
                                 2.0 * pred[t].joints[j] +
                                 pred[t - 1].joints[j];
      const Eigen::Vector3d ag =
          gt[t + 1].joints[j] - 2.0 * gt[t].joints[j] + gt[t - 1].joints[j];
      sum += (ap - ag).norm();
      ++count;
    }
  }
  return sum / count * 1000.0;
}

EvalReport evaluate_sequences(const std::vector<Pose3D>& pred,
                              const std::vector<Pose3D>& gt,
                              const std::vector<std::string>& labels) {
  if (pred.size() != gt.size()) throw DataError("sequence length mismatch");
  if (pred.empty()) throw DataError("empty evaluation input");
  EvalReport rep;
  std::map<std::string, EvalRow> rows;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    const double e = mpjpe(pred[t], gt[t]);
    const double pe = p_mpjpe(pred[t], gt[t]);
    rep.per_frame_mpjpe_mm.push_back(e);
    rep.per_frame_p_mpjpe_mm.push_back(pe);
    const std::string label = t < labels.size() ? labels[t] : "all";
    auto& row = rows[label];
    row.action = label;
    row.mpjpe_mm += e;
    row.p_mpjpe_mm += pe;
    ++row.frames;
    rep.mean_mpjpe_mm += e;
    rep.mean_p_mpjpe_mm += pe;
  }
  rep.mean_mpjpe_mm /= pred.size();
  rep.mean_p_mpjpe_mm /= pred.size();
  if (pred.size() >= 3) rep.accel_error_mm = accel_error(pred, gt);
  for (auto& [_, row] : rows) {
    row.mpjpe_mm /= row.frames;
    row.p_mpjpe_mm /= row.frames;
    rep.per_action.push_back(row);
  }
  rep.per_action.push_back({"Avg", rep.mean_mpjpe_mm, rep.mean_p_mpjpe_mm,
                            static_cast<long>(pred.size())});
  return rep;
}

}  // namespace repose
