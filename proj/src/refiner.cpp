#include "repose/refiner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "json.hpp"
#include "repose/errors.hpp"

namespace repose {

namespace {

constexpr double kLeakSlope = 0.1;

Eigen::MatrixXd lrelu(const Eigen::MatrixXd& z) {
  return z.cwiseMax(kLeakSlope * z);
}

Eigen::MatrixXd lrelu_grad(const Eigen::MatrixXd& z) {
  return (z.array() > 0.0).select(Eigen::MatrixXd::Ones(z.rows(), z.cols()),
                                  Eigen::MatrixXd::Constant(z.rows(), z.cols(),
                                                            kLeakSlope));
}

struct ForwardCache {
  Eigen::MatrixXd h0, z1, a1, h1, z2, a2, h2, y;
};

ForwardCache forward_cached(const RefinerWeights& w, const Eigen::MatrixXd& x) {
  ForwardCache c;
  c.h0 = (x * w.w_in.transpose()).rowwise() + w.b_in.transpose();
  c.z1 = (c.h0 * w.blocks[0].w1.transpose()).rowwise() +
         w.blocks[0].b1.transpose();
  c.a1 = lrelu(c.z1);
  c.h1 = c.h0 + ((c.a1 * w.blocks[0].w2.transpose()).rowwise() +
                 w.blocks[0].b2.transpose());
  c.z2 = (c.h1 * w.blocks[1].w1.transpose()).rowwise() +
         w.blocks[1].b1.transpose();
  c.a2 = lrelu(c.z2);
  c.h2 = c.h1 + ((c.a2 * w.blocks[1].w2.transpose()).rowwise() +
                 w.blocks[1].b2.transpose());
  c.y = (c.h2 * w.w_out.transpose()).rowwise() + w.b_out.transpose();
  return c;
}

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

RefinerWeights RefinerWeights::zeros() {
  RefinerWeights w;
  w.w_in = Eigen::MatrixXd::Zero(kRefinerHidden, kRefinerWindow);
  w.b_in = Eigen::VectorXd::Zero(kRefinerHidden);
  for (auto& b : w.blocks) {
    b.w1 = Eigen::MatrixXd::Zero(kRefinerHidden, kRefinerHidden);
    b.w2 = Eigen::MatrixXd::Zero(kRefinerHidden, kRefinerHidden);
    b.b1 = Eigen::VectorXd::Zero(kRefinerHidden);
    b.b2 = Eigen::VectorXd::Zero(kRefinerHidden);
  }
  w.w_out = Eigen::MatrixXd::Zero(kRefinerOutputs, kRefinerHidden);
  w.b_out = Eigen::VectorXd::Zero(kRefinerOutputs);
  return w;
}

RefinerWeights RefinerWeights::randomized(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto fill = [&](Eigen::MatrixXd& m, double fan_in) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  };
  RefinerWeights w = zeros();
  fill(w.w_in, kRefinerWindow);
  for (auto& b : w.blocks) {
    fill(b.w1, kRefinerHidden);
    fill(b.w2, kRefinerHidden);
    b.w2 *= 0.1;  // start blocks near the identity map
  }
  fill(w.w_out, kRefinerHidden);
  w.w_out *= 0.1;
  return w;
}

void RefinerWeights::validate() const {
  auto check = [](const Eigen::MatrixXd& m, int rows, int cols,
                  const char* name) {
    if (m.rows() != rows || m.cols() != cols)
      throw ModelError(std::string("refiner weight shape mismatch: ") + name);
    if (!m.allFinite())
      throw ModelError(std::string("non-finite refiner weights: ") + name);
  };
  check(w_in, kRefinerHidden, kRefinerWindow, "w_in");
  check(b_in, kRefinerHidden, 1, "b_in");
  for (const auto& b : blocks) {
    check(b.w1, kRefinerHidden, kRefinerHidden, "block.w1");
    check(b.w2, kRefinerHidden, kRefinerHidden, "block.w2");
    check(b.b1, kRefinerHidden, 1, "block.b1");
    check(b.b2, kRefinerHidden, 1, "block.b2");
  }
  check(w_out, kRefinerOutputs, kRefinerHidden, "w_out");
  check(b_out, kRefinerOutputs, 1, "b_out");
}

long RefinerWeights::param_count() const {
  long n = w_in.size() + b_in.size() + w_out.size() + b_out.size();
  for (const auto& b : blocks)
    n += b.w1.size() + b.w2.size() + b.b1.size() + b.b2.size();
  return n;
}

Eigen::MatrixXd refiner_forward(const RefinerWeights& w,
                                const Eigen::MatrixXd& x) {
  w.validate();
  if (x.cols() != kRefinerWindow)
    throw ModelError("refiner input must have 9 columns");
  return forward_cached(w, x).y;
}

PoseWindow::Push PoseWindow::push_frame(const Pose3D& pose) {
  if (!frames_.empty() &&
      pose.frame_index != frames_.back().frame_index + 1) {
    frames_.clear();
    frames_.push_back(pose);
    return Push::Gap;
  }
  frames_.push_back(pose);
  if (frames_.size() > kRefinerWindow) frames_.pop_front();
  return ready() ? Push::Ready : Push::NotReady;
}

Eigen::MatrixXd PoseWindow::channels() const {
  Eigen::MatrixXd x(kPoseChannels, kRefinerWindow);
  for (int t = 0; t < static_cast<int>(frames_.size()); ++t)
    for (int j = 0; j < kNumJoints; ++j)
      for (int d = 0; d < 3; ++d) x(j * 3 + d, t) = frames_[t].joints[j][d];
  return x;
}

RefinedPair refine(const PoseWindow& window, const RefinerWeights& weights) {
  if (!window.ready()) throw ModelError("refiner window not ready");
  const Eigen::MatrixXd y = refiner_forward(weights, window.channels());
  const Pose3D& prev = window.frames()[kRefinerWindow - 2];
  const Pose3D& cur = window.frames()[kRefinerWindow - 1];
  RefinedPair out;
  out.intermediate = cur;
  out.current = cur;
  out.intermediate.timestamp = 0.5 * (prev.timestamp + cur.timestamp);
  for (int j = 0; j < kNumJoints; ++j)
    for (int d = 0; d < 3; ++d) {
      out.intermediate.joints[j][d] = y(j * 3 + d, 0);
      out.current.joints[j][d] = y(j * 3 + d, 1);
    }
  return out;
}

double loss_total(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& gt,
                  const Eigen::VectorXd& prev_gt,
                  const Eigen::VectorXd& prev_pred, double alpha_loss,
                  bool velocity_product_form) {
  if (pred.rows() != kRefinerOutputs || pred.rows() != gt.rows() ||
      pred.cols() != gt.cols() || prev_gt.size() != pred.cols() ||
      prev_pred.size() != pred.cols())
    throw ModelError("loss shape mismatch");
  if (alpha_loss < 0.0 || alpha_loss > 1.0)
    throw ConfigError("alpha_loss must be in [0,1]");
  const double norm = pred.rows() * pred.cols();
  const double l_pos = (gt - pred).cwiseAbs().sum() / norm;
  double l_vel = 0.0;
  for (Eigen::Index c = 0; c < pred.cols(); ++c) {
    const double dg0 = gt(0, c) - prev_gt[c];
    const double dy0 = pred(0, c) - prev_pred[c];
    const double dg1 = gt(1, c) - gt(0, c);
    const double dy1 = pred(1, c) - pred(0, c);
    if (velocity_product_form)
      l_vel += std::abs(dg0) * std::abs(dy0) + std::abs(dg1) * std::abs(dy1);
    else
      l_vel += std::abs(dg0 - dy0) + std::abs(dg1 - dy1);
  }
  l_vel /= norm;
  return alpha_loss * l_pos + (1.0 - alpha_loss) * l_vel;
}

RefinerDataset RefinerDataset::from_trajectories(
    const std::vector<TrajectoryPair>& trajectories) {
  long n = 0;
  for (const auto& tp : trajectories) {
    if (tp.noisy.size() != tp.clean.size())
      throw DataError("noisy/clean trajectory length mismatch");
    if (tp.clean.size() < 10)
      throw DataError("trajectories must have >= 10 frames");
    n += static_cast<long>(tp.clean.size() - kRefinerWindow + 1) *
         kPoseChannels;
  }
  RefinerDataset ds;
  ds.x.resize(n, kRefinerWindow);
  ds.g.resize(n, kRefinerOutputs);
  ds.prev_gt.resize(n);
  ds.prev_pred.resize(n);
  long row = 0;
  for (const auto& tp : trajectories) {
    for (std::size_t t = kRefinerWindow - 1; t < tp.clean.size(); ++t) {
      for (int j = 0; j < kNumJoints; ++j)
        for (int d = 0; d < 3; ++d) {
          for (int k = 0; k < kRefinerWindow; ++k)
            ds.x(row, k) = tp.noisy[t - kRefinerWindow + 1 + k].joints[j][d];
          const double clean_prev = tp.clean[t - 1].joints[j][d];
          const double clean_cur = tp.clean[t].joints[j][d];
          ds.g(row, 0) = 0.5 * (clean_prev + clean_cur);  // midpoint target
          ds.g(row, 1) = clean_cur;
          ds.prev_gt[row] = clean_prev;
          ds.prev_pred[row] = tp.noisy[t - 1].joints[j][d];
          ++row;
        }
    }
  }
  return ds;
}

double refiner_batch_loss(const RefinerWeights& w, const RefinerDataset& batch,
                          const RefinerHyperparams& hp) {
  const Eigen::MatrixXd y = refiner_forward(w, batch.x);
  // same as loss_total row by row, averaged over the batch
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.rows(); ++i)
    total += loss_total(y.row(i).transpose(), batch.g.row(i).transpose(),
                        batch.prev_gt.segment(i, 1),
                        batch.prev_pred.segment(i, 1), hp.alpha_loss,
                        hp.velocity_product_form);
  return total / static_cast<double>(y.rows());
}

namespace {

void append(Eigen::VectorXd& out, long& pos, const Eigen::MatrixXd& m) {
  out.segment(pos, m.size()) =
      Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
  pos += m.size();
}

void take(const Eigen::VectorXd& in, long& pos, Eigen::MatrixXd& m) {
  m = Eigen::Map<const Eigen::MatrixXd>(in.data() + pos, m.rows(), m.cols());
  pos += m.size();
}

void take(const Eigen::VectorXd& in, long& pos, Eigen::VectorXd& v) {
  v = in.segment(pos, v.size());
  pos += v.size();
}

}  // namespace

Eigen::VectorXd flatten_params(const RefinerWeights& w) {
  Eigen::VectorXd flat(w.param_count());
  long pos = 0;
  append(flat, pos, w.w_in);
  append(flat, pos, w.b_in);
  for (const auto& b : w.blocks) {
    append(flat, pos, b.w1);
    append(flat, pos, b.b1);
    append(flat, pos, b.w2);
    append(flat, pos, b.b2);
  }
  append(flat, pos, w.w_out);
  append(flat, pos, w.b_out);
  return flat;
}

RefinerWeights unflatten_params(const Eigen::VectorXd& flat) {
  RefinerWeights w = RefinerWeights::zeros();
  long pos = 0;
  take(flat, pos, w.w_in);
  take(flat, pos, w.b_in);
  for (auto& b : w.blocks) {
    take(flat, pos, b.w1);
    take(flat, pos, b.b1);
    take(flat, pos, b.w2);
    take(flat, pos, b.b2);
  }
  take(flat, pos, w.w_out);
  take(flat, pos, w.b_out);
  if (pos != flat.size()) throw ModelError("parameter vector size mismatch");
  return w;
}

Eigen::VectorXd refiner_gradient(const RefinerWeights& w,
                                 const RefinerDataset& batch,
                                 const RefinerHyperparams& hp) {
  const ForwardCache c = forward_cached(w, batch.x);
  const long n = batch.x.rows();
  const double norm =
      1.0 / (static_cast<double>(n) * kRefinerOutputs);  // 1/(B*T), C=1/row
  const double a = hp.alpha_loss;

  // dL/dy, subgradient of the L1 terms
  Eigen::MatrixXd dy = Eigen::MatrixXd::Zero(n, kRefinerOutputs);
  for (long i = 0; i < n; ++i) {
    const double y0 = c.y(i, 0), y1 = c.y(i, 1);
    const double g0 = batch.g(i, 0), g1 = batch.g(i, 1);
    dy(i, 0) += -a * sgn(g0 - y0) * norm;
    dy(i, 1) += -a * sgn(g1 - y1) * norm;
    const double dg0 = g0 - batch.prev_gt[i];
    const double dy0 = y0 - batch.prev_pred[i];
    const double dg1 = g1 - g0;
    const double dy1 = y1 - y0;
    if (hp.velocity_product_form) {
      dy(i, 0) += (1.0 - a) * norm *
                  (std::abs(dg0) * sgn(dy0) - std::abs(dg1) * sgn(dy1));
      dy(i, 1) += (1.0 - a) * norm * std::abs(dg1) * sgn(dy1);
    } else {
      dy(i, 0) += (1.0 - a) * norm * (sgn(dg1 - dy1) - sgn(dg0 - dy0));
      dy(i, 1) -= (1.0 - a) * norm * sgn(dg1 - dy1);
    }
  }

  RefinerWeights g = RefinerWeights::zeros();
  g.w_out = dy.transpose() * c.h2;
  g.b_out = dy.colwise().sum().transpose();
  Eigen::MatrixXd dh = dy * w.w_out;  // dL/dh2

  auto block_backward = [&](const RefinerWeights::Block& blk,
                            RefinerWeights::Block& gb,
                            const Eigen::MatrixXd& h_in,
                            const Eigen::MatrixXd& z,
                            const Eigen::MatrixXd& act) {
    gb.w2 = dh.transpose() * act;
    gb.b2 = dh.colwise().sum().transpose();
    const Eigen::MatrixXd dz =
        (dh * blk.w2).cwiseProduct(lrelu_grad(z));
    gb.w1 = dz.transpose() * h_in;
    gb.b1 = dz.colwise().sum().transpose();
    dh = dh + dz * blk.w1;  // skip connection
  };

  block_backward(w.blocks[1], g.blocks[1], c.h1, c.z2, c.a2);
  block_backward(w.blocks[0], g.blocks[0], c.h0, c.z1, c.a1);

  g.w_in = dh.transpose() * batch.x;
  g.b_in = dh.colwise().sum().transpose();
  return flatten_params(g);
}

TrainResult train(const std::vector<TrajectoryPair>& trajectories,
                  const RefinerHyperparams& hp) {
  const RefinerDataset full = RefinerDataset::from_trajectories(trajectories);
  const long n = full.x.rows();
  RefinerWeights weights = RefinerWeights::randomized(hp.seed);
  Eigen::VectorXd theta = flatten_params(weights);
  Eigen::VectorXd m = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(theta.size());
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  std::mt19937_64 rng(hp.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<long> order(n);
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  long step = 0;
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    // decay to 1% of the base rate over the run
    const double lr =
        hp.learning_rate *
        std::pow(0.01, hp.epochs > 1
                           ? static_cast<double>(epoch) / (hp.epochs - 1)
                           : 0.0);
    double epoch_loss = 0.0;
    long batches = 0;
    for (long start = 0; start < n; start += hp.batch_size) {
      const long count = std::min<long>(hp.batch_size, n - start);
      RefinerDataset batch;
      batch.x.resize(count, kRefinerWindow);
      batch.g.resize(count, kRefinerOutputs);
      batch.prev_gt.resize(count);
      batch.prev_pred.resize(count);
      for (long i = 0; i < count; ++i) {
        const long src = order[start + i];
        batch.x.row(i) = full.x.row(src);
        batch.g.row(i) = full.g.row(src);
        batch.prev_gt[i] = full.prev_gt[src];
        batch.prev_pred[i] = full.prev_pred[src];
      }
      const RefinerWeights cur = unflatten_params(theta);
      epoch_loss += refiner_batch_loss(cur, batch, hp);
      ++batches;
      const Eigen::VectorXd grad = refiner_gradient(cur, batch, hp);
      ++step;
      m = beta1 * m + (1.0 - beta1) * grad;
      v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
      const Eigen::VectorXd m_hat = m / (1.0 - std::pow(beta1, step));
      const Eigen::VectorXd v_hat = v / (1.0 - std::pow(beta2, step));
      theta -= lr * (m_hat.array() / (v_hat.array().sqrt() + eps)).matrix();
    }
    epoch_loss /= static_cast<double>(batches);
    result.loss_curve.push_back(epoch_loss);
    if (epoch > 0 && epoch_loss > 10.0 * result.loss_curve.front())
      throw ModelError("refiner training diverged");
  }
  result.weights = unflatten_params(theta);
  if (result.loss_curve.size() >= 2 &&
      result.loss_curve.back() >= result.loss_curve.front())
    throw ModelError("refiner training made no progress");
  return result;
}

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  std::vector<double> data;  // row-major
  data.reserve(m.size());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return data;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, int rows, int cols) {
  const auto data = j.get<std::vector<double>>();
  if (data.size() != static_cast<std::size_t>(rows) * cols)
    throw FormatError("weights array has the wrong element count");
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = data[r * cols + c];
  return m;
}

}  // namespace

std::string RefinerWeights::to_json_string() const {
  validate();
  nlohmann::json j;
  j["version"] = 1;
  j["window"] = kRefinerWindow;
  j["hidden"] = kRefinerHidden;
  j["outputs"] = kRefinerOutputs;
  j["w_in"] = matrix_json(w_in);
  j["b_in"] = matrix_json(b_in);
  for (const auto& b : blocks)
    j["blocks"].push_back({{"w1", matrix_json(b.w1)},
                           {"b1", matrix_json(b.b1)},
                           {"w2", matrix_json(b.w2)},
                           {"b2", matrix_json(b.b2)}});
  j["w_out"] = matrix_json(w_out);
  j["b_out"] = matrix_json(b_out);
  return j.dump();
}

RefinerWeights RefinerWeights::from_json_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad weights file: ") + e.what());
  }
  if (j.value("version", 0) != 1)
    throw FormatError("unsupported weights file version");
  if (j.value("window", 0) != kRefinerWindow ||
      j.value("hidden", 0) != kRefinerHidden ||
      j.value("outputs", 0) != kRefinerOutputs)
    throw FormatError("weights file has unexpected layer shapes");
  RefinerWeights w = zeros();
  w.w_in = matrix_from_json(j.at("w_in"), kRefinerHidden, kRefinerWindow);
  w.b_in = matrix_from_json(j.at("b_in"), kRefinerHidden, 1);
  for (int i = 0; i < 2; ++i) {
    const auto& bj = j.at("blocks").at(i);
    w.blocks[i].w1 =
        matrix_from_json(bj.at("w1"), kRefinerHidden, kRefinerHidden);
    w.blocks[i].b1 = matrix_from_json(bj.at("b1"), kRefinerHidden, 1);
    w.blocks[i].w2 =
        matrix_from_json(bj.at("w2"), kRefinerHidden, kRefinerHidden);
    w.blocks[i].b2 = matrix_from_json(bj.at("b2"), kRefinerHidden, 1);
  }
  w.w_out = matrix_from_json(j.at("w_out"), kRefinerOutputs, kRefinerHidden);
  w.b_out = matrix_from_json(j.at("b_out"), kRefinerOutputs, 1);
  w.validate();
  return w;
}

}  // namespace repose
