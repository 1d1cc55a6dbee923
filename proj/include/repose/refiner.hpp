#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "repose/skeleton.hpp"

namespace repose {

inline constexpr int kRefinerWindow = 9;   // current + preceding eight
inline constexpr int kRefinerOutputs = 2;  // intermediate + current
inline constexpr int kRefinerHidden = 64;
inline constexpr int kPoseChannels = kNumJoints * 3;  // 51

// Channel-shared temporal MLP: 9 -> 64, two residual blocks
// (linear, leaky-0.1 rectifier, linear, skip add), 64 -> 2.
struct RefinerWeights {
  struct Block {
    Eigen::MatrixXd w1, w2;  // hidden x hidden
    Eigen::VectorXd b1, b2;  // hidden
  };
  Eigen::MatrixXd w_in;   // hidden x window
  Eigen::VectorXd b_in;   // hidden
  std::array<Block, 2> blocks;
  Eigen::MatrixXd w_out;  // outputs x hidden
  Eigen::VectorXd b_out;  // outputs

  static RefinerWeights zeros();
  static RefinerWeights randomized(std::uint64_t seed);
  void validate() const;  // ModelError on shape/finite violations
  long param_count() const;

  std::string to_json_string() const;
  static RefinerWeights from_json_string(const std::string& text);
};

// Batch forward pass: rows are channels, columns are the 9 window
// steps; output columns are (intermediate, current).
Eigen::MatrixXd refiner_forward(const RefinerWeights& w,
                                const Eigen::MatrixXd& x);

// Causal ring buffer of the most recent 9 contiguous frames.
class PoseWindow {
 public:
  enum class Push { NotReady, Ready, Gap };

  // Non-contiguous frame index resets the buffer and reports Gap.
  Push push_frame(const Pose3D& pose);
  bool ready() const { return frames_.size() == kRefinerWindow; }
  const std::deque<Pose3D>& frames() const { return frames_; }
  Eigen::MatrixXd channels() const;  // 51 x 9

 private:
  std::deque<Pose3D> frames_;
};

struct RefinedPair {
  Pose3D intermediate;  // timestamped halfway between previous and current
  Pose3D current;
};

RefinedPair refine(const PoseWindow& window, const RefinerWeights& weights);

struct RefinerHyperparams {
  double alpha_loss = 0.5;  // position vs velocity mixing
  double learning_rate = 1e-3;
  int epochs = 200;
  int batch_size = 64;
  // Eq-as-printed product form of the velocity term, for comparison.
  bool velocity_product_form = false;
  std::uint64_t seed = 0;
};

// alpha L_pos + (1 - alpha) L_vel over a 2 x C output pair.
// prev_* supply the t-1 anchor for the first velocity term.
double loss_total(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& gt,
                  const Eigen::VectorXd& prev_gt,
                  const Eigen::VectorXd& prev_pred, double alpha_loss,
                  bool velocity_product_form = false);

struct TrajectoryPair {
  std::vector<Pose3D> noisy;
  std::vector<Pose3D> clean;
};

// Flattened per-channel training set built from sliding windows.
struct RefinerDataset {
  Eigen::MatrixXd x;        // N x 9 noisy windows
  Eigen::MatrixXd g;        // N x 2 clean (midpoint, current)
  Eigen::VectorXd prev_gt;  // N, clean t-1
  Eigen::VectorXd prev_pred;  // N, noisy t-1 (previous emitted anchor)

  static RefinerDataset from_trajectories(
      const std::vector<TrajectoryPair>& trajectories);
};

struct TrainResult {
  RefinerWeights weights;
  std::vector<double> loss_curve;  // one entry per epoch
};

// Adam over explicit backprop gradients of loss_total.
TrainResult train(const std::vector<TrajectoryPair>& trajectories,
                  const RefinerHyperparams& hp);

// Analytic gradient of the mean loss over a sample batch, flattened in
// the same order as flatten_params; used by training and tests.
Eigen::VectorXd refiner_gradient(const RefinerWeights& w,
                                 const RefinerDataset& batch,
                                 const RefinerHyperparams& hp);
double refiner_batch_loss(const RefinerWeights& w,
                          const RefinerDataset& batch,
                          const RefinerHyperparams& hp);

Eigen::VectorXd flatten_params(const RefinerWeights& w);
RefinerWeights unflatten_params(const Eigen::VectorXd& flat);

}  // namespace repose
