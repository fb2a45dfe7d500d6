// Test-only oracles, kept independent of the implementation paths they check.
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "chanlab/relu_net.hpp"

namespace chanlab::testing {

/// Central finite-difference gradient of the batch loss w.r.t. every
/// parameter. O(#params) loss evaluations; small nets only.
inline MlpParams finite_diff_gradient(const MlpParams& params, const SampleSet& batch,
                                      double step) {
  MlpParams grad = params;
  MlpParams probe = params;
  const auto loss_at = [&]() { return dataset_loss(probe, batch); };
  for (size_t i = 0; i < params.layers.size(); ++i) {
    for (Eigen::Index k = 0; k < params.layers[i].weight.size(); ++k) {
      const double orig = params.layers[i].weight(k);
      probe.layers[i].weight(k) = orig + step;
      const double up = loss_at();
      probe.layers[i].weight(k) = orig - step;
      const double down = loss_at();
      probe.layers[i].weight(k) = orig;
      grad.layers[i].weight(k) = (up - down) / (2.0 * step);
    }
    for (Eigen::Index k = 0; k < params.layers[i].bias.size(); ++k) {
      const double orig = params.layers[i].bias(k);
      probe.layers[i].bias(k) = orig + step;
      const double up = loss_at();
      probe.layers[i].bias(k) = orig - step;
      const double down = loss_at();
      probe.layers[i].bias(k) = orig;
      grad.layers[i].bias(k) = (up - down) / (2.0 * step);
    }
  }
  return grad;
}

inline double max_abs_param(const MlpParams& p) {
  double m = 0.0;
  for (const auto& l : p.layers) {
    m = std::max(m, l.weight.cwiseAbs().maxCoeff());
    if (l.bias.size() > 0) m = std::max(m, l.bias.cwiseAbs().maxCoeff());
  }
  return m;
}

inline double max_abs_diff(const MlpParams& a, const MlpParams& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.layers.size(); ++i) {
    m = std::max(m, (a.layers[i].weight - b.layers[i].weight).cwiseAbs().maxCoeff());
    m = std::max(m, (a.layers[i].bias - b.layers[i].bias).cwiseAbs().maxCoeff());
  }
  return m;
}

/// Smallest |pre-activation| over all hidden neurons and batch columns;
/// gradient checks want this well away from the ReLU kinks.
inline double min_preactivation_gap(const MlpParams& params, const Mat& x) {
  double gap = std::numeric_limits<double>::infinity();
  Mat a = x;
  for (size_t i = 0; i + 1 < params.layers.size(); ++i) {
    Mat z = (params.layers[i].weight * a).colwise() + params.layers[i].bias;
    gap = std::min(gap, z.cwiseAbs().minCoeff());
    a = z.cwiseMax(0.0);
  }
  return gap;
}

/// Affine least squares minimizing sum ||W x + b - h||^2, solved through
/// the augmented normal equations with Gaussian elimination and partial
/// pivoting (an algebraic route distinct from the centered SPD solve).
inline AffineEstimator brute_force_affine_lsq(const SampleSet& set) {
  const int d = set.dim();
  const long n = set.size();
  const int p = d + 1;
  Mat g = Mat::Zero(p, p);
  Mat t = Mat::Zero(d, p);
  for (long m = 0; m < n; ++m) {
    Vec z(p);
    z.head(d) = set.x.col(m);
    z(d) = 1.0;
    g += z * z.transpose();
    t += set.h.col(m) * z.transpose();
  }
  // Solve G M^T = T^T by elimination.
  Mat a = g;
  Mat rhs = t.transpose();
  for (int col = 0; col < p; ++col) {
    int pivot = col;
    for (int r = col + 1; r < p; ++r)
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    if (a(pivot, col) == 0.0) throw std::runtime_error("singular normal equations");
    a.row(col).swap(a.row(pivot));
    rhs.row(col).swap(rhs.row(pivot));
    for (int r = col + 1; r < p; ++r) {
      const double f = a(r, col) / a(col, col);
      a.row(r).tail(p - col) -= f * a.row(col).tail(p - col);
      rhs.row(r) -= f * rhs.row(col);
    }
  }
  Mat mt = Mat::Zero(p, d);
  for (int r = p - 1; r >= 0; --r) {
    mt.row(r) = rhs.row(r);
    for (int c = r + 1; c < p; ++c) mt.row(r) -= a(r, c) * mt.row(c);
    mt.row(r) /= a(r, r);
  }
  AffineEstimator est;
  est.weight = mt.transpose().leftCols(d);
  est.bias = mt.transpose().col(d);
  return est;
}

}  // namespace chanlab::testing
