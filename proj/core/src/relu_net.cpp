#include "chanlab/relu_net.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace chanlab {

void MlpSpec::validate() const {
  if (widths.size() < 2) throw std::invalid_argument("spec needs at least input and output widths");
  for (int w : widths)
    if (w < 1) throw std::invalid_argument("all widths must be >= 1");
}

MlpSpec MlpSpec::equal_width(int d, int hidden_layers, int width) {
  MlpSpec spec;
  spec.widths.assign(static_cast<size_t>(hidden_layers) + 2, width);
  spec.widths.front() = d;
  spec.widths.back() = d;
  spec.validate();
  return spec;
}

std::vector<int> MlpParams::widths() const {
  std::vector<int> w;
  w.push_back(static_cast<int>(layers.front().weight.cols()));
  for (const auto& l : layers) w.push_back(static_cast<int>(l.weight.rows()));
  return w;
}

long MlpParams::hidden_neurons() const {
  long n = 0;
  for (size_t i = 0; i + 1 < layers.size(); ++i) n += layers[i].weight.rows();
  return n;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (optimizer == Optimizer::kAdam) {
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
      throw std::invalid_argument("adam betas must lie in (0, 1)");
    if (!(eps > 0.0)) throw std::invalid_argument("adam eps must be positive");
  }
}

MlpParams init_params(const MlpSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed, 0);
  MlpParams params;
  const auto& w = spec.widths;
  for (size_t i = 0; i + 1 < w.size(); ++i) {
    MlpLayer layer;
    const double std_dev = std::sqrt(2.0 / static_cast<double>(w[i]));
    layer.weight.resize(w[i + 1], w[i]);
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
        layer.weight(r, c) = std_dev * rng.gaussian();
    layer.bias = Vec::Zero(w[i + 1]);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

Vec forward(const MlpParams& params, const Vec& x) {
  if (x.size() != params.input_dim()) throw std::invalid_argument("input dimension mismatch");
  Vec a = x;
  const size_t n = params.layers.size();
  for (size_t i = 0; i < n; ++i) {
    Vec z = params.layers[i].weight * a + params.layers[i].bias;
    a = (i + 1 < n) ? z.cwiseMax(0.0) : z;
  }
  return a;
}

Mat forward_batch(const MlpParams& params, const Mat& x) {
  if (x.rows() != params.input_dim()) throw std::invalid_argument("input dimension mismatch");
  Mat a = x;
  const size_t n = params.layers.size();
  for (size_t i = 0; i < n; ++i) {
    Mat z = (params.layers[i].weight * a).colwise() + params.layers[i].bias;
    a = (i + 1 < n) ? z.cwiseMax(0.0) : z;
  }
  return a;
}

namespace {

// Forward with retained activations, then reverse mode. The loss is the
// batch mean of the squared l2 error; gradients use 1[z > 0] so the
// subgradient at exactly 0 is 0.
std::pair<double, MlpParams> loss_and_gradient_mats(const MlpParams& params, const Mat& x,
                                                    const Mat& h) {
  const size_t n = params.layers.size();
  const double batch = static_cast<double>(x.cols());

  std::vector<Mat> acts;  // inputs to each layer
  acts.reserve(n + 1);
  acts.push_back(x);
  std::vector<Mat> pre;  // pre-activations of hidden layers
  pre.reserve(n - 1);
  for (size_t i = 0; i < n; ++i) {
    Mat z = (params.layers[i].weight * acts.back()).colwise() + params.layers[i].bias;
    if (i + 1 < n) {
      pre.push_back(z);
      acts.push_back(z.cwiseMax(0.0));
    } else {
      acts.push_back(std::move(z));
    }
  }

  const Mat resid = acts.back() - h;
  const double loss = resid.squaredNorm() / batch;

  MlpParams grad;
  grad.layers.resize(n);
  Mat delta = (2.0 / batch) * resid;
  for (size_t i = n; i-- > 0;) {
    grad.layers[i].weight = delta * acts[i].transpose();
    grad.layers[i].bias = delta.rowwise().sum();
    if (i > 0) {
      delta = (params.layers[i].weight.transpose() * delta).array() *
              (pre[i - 1].array() > 0.0).cast<double>();
    }
  }
  return {loss, std::move(grad)};
}

}  // namespace

std::pair<double, MlpParams> loss_and_gradient(const MlpParams& params, const SampleSet& batch) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  if (batch.dim() != params.input_dim() || batch.dim() != params.output_dim())
    throw std::invalid_argument("batch dimension mismatch");
  return loss_and_gradient_mats(params, batch.x, batch.h);
}

double dataset_loss(const MlpParams& params, const SampleSet& data) {
  if (data.empty()) throw std::invalid_argument("empty dataset");
  return (forward_batch(params, data.x) - data.h).squaredNorm() /
         static_cast<double>(data.size());
}

std::pair<MlpParams, TrainReport> train(const MlpSpec& spec, const SampleSet& train_set,
                                        const TrainConfig& config) {
  spec.validate();
  config.validate();
  if (train_set.empty()) throw std::invalid_argument("empty training set");
  if (train_set.dim() != spec.input_dim() || train_set.dim() != spec.output_dim())
    throw std::invalid_argument("training set dimension mismatch");

  const auto t0 = std::chrono::steady_clock::now();
  MlpParams params = init_params(spec, config.seed);
  const size_t n_layers = params.layers.size();
  const long n = train_set.size();

  // Adam moments.
  std::vector<MlpLayer> m(n_layers), v(n_layers);
  if (config.optimizer == Optimizer::kAdam) {
    for (size_t i = 0; i < n_layers; ++i) {
      m[i].weight = Mat::Zero(params.layers[i].weight.rows(), params.layers[i].weight.cols());
      m[i].bias = Vec::Zero(params.layers[i].bias.size());
      v[i] = m[i];
    }
  }

  Rng shuffle_rng(config.seed, 1);
  std::vector<long> order(n);
  for (long i = 0; i < n; ++i) order[i] = i;

  TrainReport report;
  report.loss_curve.reserve(config.epochs);
  long step = 0;
  Mat bx, bh;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.shuffle) {
      for (long i = n - 1; i > 0; --i) {
        const long j = static_cast<long>(shuffle_rng.next_u64() % static_cast<std::uint64_t>(i + 1));
        std::swap(order[i], order[j]);
      }
    }
    for (long start = 0; start < n; start += config.batch_size) {
      const long b = std::min<long>(config.batch_size, n - start);
      bx.resize(train_set.dim(), b);
      bh.resize(train_set.dim(), b);
      for (long k = 0; k < b; ++k) {
        bx.col(k) = train_set.x.col(order[start + k]);
        bh.col(k) = train_set.h.col(order[start + k]);
      }
      auto [loss, grad] = loss_and_gradient_mats(params, bx, bh);
      if (!std::isfinite(loss)) throw std::runtime_error("training diverged (reduce learning rate)");
      ++step;
      if (config.optimizer == Optimizer::kSgd) {
        for (size_t i = 0; i < n_layers; ++i) {
          params.layers[i].weight -= config.learning_rate * grad.layers[i].weight;
          params.layers[i].bias -= config.learning_rate * grad.layers[i].bias;
        }
      } else {
        const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
        const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
        const double lr = config.learning_rate * std::sqrt(bc2) / bc1;
        for (size_t i = 0; i < n_layers; ++i) {
          auto& mw = m[i].weight;
          auto& vw = v[i].weight;
          mw = config.beta1 * mw + (1.0 - config.beta1) * grad.layers[i].weight;
          vw = config.beta2 * vw +
               (1.0 - config.beta2) * grad.layers[i].weight.array().square().matrix();
          params.layers[i].weight.array() -=
              lr * mw.array() / (vw.array().sqrt() + config.eps * std::sqrt(bc2));
          auto& mb = m[i].bias;
          auto& vb = v[i].bias;
          mb = config.beta1 * mb + (1.0 - config.beta1) * grad.layers[i].bias;
          vb = config.beta2 * vb +
               (1.0 - config.beta2) * grad.layers[i].bias.array().square().matrix();
          params.layers[i].bias.array() -=
              lr * mb.array() / (vb.array().sqrt() + config.eps * std::sqrt(bc2));
        }
      }
    }
    const double epoch_loss = dataset_loss(params, train_set);
    if (!std::isfinite(epoch_loss))
      throw std::runtime_error("training diverged (reduce learning rate)");
    report.loss_curve.push_back(epoch_loss);
  }

  report.final_train_loss =
      report.loss_curve.empty() ? dataset_loss(params, train_set) : report.loss_curve.back();
  report.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(params), std::move(report)};
}

AffineEstimator closed_form_affine_fit(const SampleSet& train_set, double ridge) {
  const int d = train_set.dim();
  const long n = train_set.size();
  if (n < d + 1) throw std::invalid_argument("affine fit needs at least d+1 samples");
  if (ridge < 0.0) throw std::invalid_argument("ridge must be nonnegative");

  const Vec xbar = train_set.x.rowwise().mean();
  const Vec hbar = train_set.h.rowwise().mean();
  const Mat xc = train_set.x.colwise() - xbar;
  const Mat hc = train_set.h.colwise() - hbar;
  Mat a = xc * xc.transpose();
  a.diagonal().array() += ridge;
  const Mat c = hc * xc.transpose();

  Mat wt;
  try {
    wt = spd_solve(a, Mat(c.transpose()));  // A W^T = C^T
  } catch (const std::runtime_error&) {
    throw std::runtime_error("degenerate sample covariance");
  }
  AffineEstimator est;
  est.weight = wt.transpose();
  est.bias = hbar - est.weight * xbar;
  return est;
}

MlpParams affine_to_relu(const AffineEstimator& aff) {
  const Eigen::Index d_out = aff.weight.rows();
  const Eigen::Index d_in = aff.weight.cols();
  if (aff.bias.size() != d_out) throw std::invalid_argument("affine bias dimension mismatch");

  MlpParams params;
  MlpLayer hidden;
  hidden.weight.resize(2 * d_out, d_in);
  hidden.weight.topRows(d_out) = aff.weight;
  hidden.weight.bottomRows(d_out) = -aff.weight;
  hidden.bias.resize(2 * d_out);
  hidden.bias.head(d_out) = aff.bias;
  hidden.bias.tail(d_out) = -aff.bias;

  MlpLayer out;
  out.weight.resize(d_out, 2 * d_out);
  out.weight.leftCols(d_out) = Mat::Identity(d_out, d_out);
  out.weight.rightCols(d_out) = -Mat::Identity(d_out, d_out);
  out.bias = Vec::Zero(d_out);

  params.layers.push_back(std::move(hidden));
  params.layers.push_back(std::move(out));
  return params;
}

MlpParams extend_depth_identity(const MlpParams& params, int extra_layers) {
  if (extra_layers < 1) throw std::invalid_argument("extra_layers must be positive");
  if (params.layers.empty()) throw std::invalid_argument("empty parameter set");

  MlpParams out;
  out.layers.assign(params.layers.begin(), params.layers.end() - 1);
  const MlpLayer& last = params.layers.back();
  const Eigen::Index w = last.weight.cols();

  // v -> [phi(v); phi(-v)] keeps v recoverable as the difference of the
  // two halves; subsequent layers map [p; q] -> [p - q; q - p] which is a
  // fixed point of the replication.
  MlpLayer split;
  split.weight.resize(2 * w, w);
  split.weight.topRows(w) = Mat::Identity(w, w);
  split.weight.bottomRows(w) = -Mat::Identity(w, w);
  split.bias = Vec::Zero(2 * w);
  out.layers.push_back(std::move(split));

  for (int k = 1; k < extra_layers; ++k) {
    MlpLayer rep;
    rep.weight.resize(2 * w, 2 * w);
    rep.weight.topLeftCorner(w, w) = Mat::Identity(w, w);
    rep.weight.topRightCorner(w, w) = -Mat::Identity(w, w);
    rep.weight.bottomLeftCorner(w, w) = -Mat::Identity(w, w);
    rep.weight.bottomRightCorner(w, w) = Mat::Identity(w, w);
    rep.bias = Vec::Zero(2 * w);
    out.layers.push_back(std::move(rep));
  }

  MlpLayer fold;
  fold.weight.resize(last.weight.rows(), 2 * w);
  fold.weight.leftCols(w) = last.weight;
  fold.weight.rightCols(w) = -last.weight;
  fold.bias = last.bias;
  out.layers.push_back(std::move(fold));
  return out;
}

namespace {

constexpr char kMagic[10] = {'R', 'E', 'L', 'U', '-', 'M', 'L', 'P', '-', '1'};

void write_u64(std::ostream& os, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(buf, 8);
}

std::uint64_t read_u64(std::istream& is) {
  unsigned char buf[8];
  is.read(reinterpret_cast<char*>(buf), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

void write_f64(std::ostream& os, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  write_u64(os, v);
}

double read_f64(std::istream& is) {
  const std::uint64_t v = read_u64(is);
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}

}  // namespace

void save_mlp(const std::string& path, const MlpParams& params) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  os.write(kMagic, sizeof(kMagic));
  const auto widths = params.widths();
  write_u64(os, widths.size());
  for (int w : widths) write_u64(os, static_cast<std::uint64_t>(w));
  for (const auto& layer : params.layers) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) write_f64(os, layer.weight(r, c));
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) write_f64(os, layer.bias(i));
  }
  if (!os) throw std::runtime_error("checkpoint write failed: " + path);
}

MlpParams load_mlp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[10];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("bad checkpoint magic: " + path);
  const std::uint64_t n_widths = read_u64(is);
  if (n_widths < 2 || n_widths > 1024) throw std::runtime_error("bad checkpoint header: " + path);
  std::vector<int> widths(n_widths);
  for (auto& w : widths) {
    w = static_cast<int>(read_u64(is));
    if (w < 1) throw std::runtime_error("bad checkpoint widths: " + path);
  }
  MlpParams params;
  for (size_t i = 0; i + 1 < widths.size(); ++i) {
    MlpLayer layer;
    layer.weight.resize(widths[i + 1], widths[i]);
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = read_f64(is);
    layer.bias.resize(widths[i + 1]);
    for (Eigen::Index b = 0; b < layer.bias.size(); ++b) layer.bias(b) = read_f64(is);
    params.layers.push_back(std::move(layer));
  }
  if (!is) throw std::runtime_error("truncated checkpoint: " + path);
  return params;
}

}  // namespace chanlab
