#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "chanlab/channel_model.hpp"
#include "chanlab/estimators.hpp"

namespace chanlab {

/// Layer widths (d0, d1, ..., d_l, d_{l+1}); activation is ReLU on every
/// hidden layer, none on the output layer.
struct MlpSpec {
  std::vector<int> widths;

  void validate() const;
  int input_dim() const { return widths.front(); }
  int output_dim() const { return widths.back(); }
  int hidden_layers() const { return static_cast<int>(widths.size()) - 2; }

  static MlpSpec equal_width(int d, int hidden_layers, int width);
};

struct MlpLayer {
  Mat weight;
  Vec bias;
};

struct MlpParams {
  std::vector<MlpLayer> layers;

  std::vector<int> widths() const;
  int input_dim() const { return static_cast<int>(layers.front().weight.cols()); }
  int output_dim() const { return static_cast<int>(layers.back().weight.rows()); }
  /// Total hidden neuron count (the activation-pattern length).
  long hidden_neurons() const;
};

enum class Optimizer { kSgd, kAdam };

struct TrainConfig {
  Optimizer optimizer = Optimizer::kAdam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double learning_rate = 1e-3;
  int batch_size = 128;
  int epochs = 200;
  std::uint64_t seed = 0;
  bool shuffle = true;

  void validate() const;
};

struct TrainReport {
  double final_train_loss = 0.0;
  std::vector<double> loss_curve;  // full-dataset loss after each epoch
  double wall_time_sec = 0.0;
};

/// He-normal weights (std sqrt(2/fan_in)), zero biases.
MlpParams init_params(const MlpSpec& spec, std::uint64_t seed);

Vec forward(const MlpParams& params, const Vec& x);
Mat forward_batch(const MlpParams& params, const Mat& x);

/// Mean of ||f(x_m) - h_m||^2 over the batch and its exact gradient
/// (reverse mode); the ReLU subgradient at 0 is taken as 0.
std::pair<double, MlpParams> loss_and_gradient(const MlpParams& params, const SampleSet& batch);

double dataset_loss(const MlpParams& params, const SampleSet& data);

/// Mini-batch first-order training on the empirical loss.
/// Throws std::runtime_error("training diverged (reduce learning rate)")
/// when the loss goes non-finite.
std::pair<MlpParams, TrainReport> train(const MlpSpec& spec, const SampleSet& train_set,
                                        const TrainConfig& config);

/// Closed-form empirical-loss minimizer over affine maps:
///   W = (sum h_c x_c^T)(sum x_c x_c^T + ridge I)^-1 on centered samples,
///   b = mean(h) - W mean(x).
AffineEstimator closed_form_affine_fit(const SampleSet& train_set, double ridge = 0.0);

/// Two-layer ReLU network of hidden size 2d computing exactly Wx + b,
/// via phi(a) - phi(-a) = a.
MlpParams affine_to_relu(const AffineEstimator& aff);

/// Append extra_layers hidden layers that replicate the last hidden
/// output through +/- identity pairs; the realized function is unchanged.
MlpParams extend_depth_identity(const MlpParams& params, int extra_layers);

/// Checkpoint container: magic "RELU-MLP-1", then widths and row-major
/// layer data as little-endian 64-bit values (see README for the layout).
void save_mlp(const std::string& path, const MlpParams& params);
MlpParams load_mlp(const std::string& path);

}  // namespace chanlab
