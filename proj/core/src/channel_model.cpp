#include "chanlab/channel_model.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace chanlab {

CovarianceSpec CovarianceSpec::diagonal(double sigma2) {
  CovarianceSpec c;
  c.kind = CovKind::kDiagonal;
  c.sigma2 = sigma2;
  return c;
}

CovarianceSpec CovarianceSpec::full(Mat m) {
  CovarianceSpec c;
  c.kind = CovKind::kFull;
  c.matrix = std::move(m);
  return c;
}

Mat CovarianceSpec::dense(int d) const {
  if (kind == CovKind::kDiagonal) return sigma2 * Mat::Identity(d, d);
  return matrix;
}

void CovarianceSpec::validate(int d) const {
  if (d < 1) throw std::invalid_argument("dimension must be positive");
  if (kind == CovKind::kDiagonal) {
    if (!(sigma2 > 0.0)) throw std::invalid_argument("diagonal covariance requires sigma2 > 0");
    return;
  }
  if (matrix.rows() != d || matrix.cols() != d)
    throw std::invalid_argument("covariance dimension mismatch");
  cholesky_psd(matrix);  // throws "covariance not PSD" if not
}

void ObservationModel::validate() const {
  if (tau != 1.0 && tau != -1.0) throw std::invalid_argument("pilot tau must be +1 or -1");
  if (!(sigma_n2 > 0.0)) throw std::invalid_argument("sigma_n2 must be positive");
  if (distortion == DistortionKind::kRapp) {
    if (!(rapp.x_sat > 0.0)) throw std::invalid_argument("rapp x_sat must be positive");
    if (!(rapp.omega >= 1.0)) throw std::invalid_argument("rapp omega must be >= 1");
  }
}

namespace {

Vec gaussian_vec(int d, Rng& rng) {
  Vec v(d);
  for (int i = 0; i < d; ++i) v(i) = rng.gaussian();
  return v;
}

// Sampler with the covariance factor computed once.
struct ChannelSampler {
  ChannelSampler(const CovarianceSpec& cov, int d) : dim(d) {
    cov.validate(d);
    if (cov.kind == CovKind::kDiagonal) {
      sigma = std::sqrt(cov.sigma2);
    } else {
      chol = cholesky_psd(cov.matrix);
    }
  }

  Vec draw(Rng& rng) const {
    Vec z = gaussian_vec(dim, rng);
    if (chol.size() == 0) return sigma * z;
    return chol * z;
  }

  int dim;
  double sigma = 1.0;
  Mat chol;
};

}  // namespace

Vec sample_channel(const CovarianceSpec& cov, int d, Rng& rng) {
  return ChannelSampler(cov, d).draw(rng);
}

Vec observe(const Vec& h, const ObservationModel& model, Rng& rng) {
  model.validate();
  const int d = static_cast<int>(h.size());
  Vec u = model.tau * h + std::sqrt(model.sigma_n2) * gaussian_vec(d, rng);
  if (model.distortion == DistortionKind::kLinear) return u;
  return rapp_apply(u, model.rapp);
}

SampleSet gen_dataset(const CovarianceSpec& cov, const ObservationModel& model,
                      int d, long size, Rng& rng) {
  if (size < 1) throw std::invalid_argument("dataset size must be >= 1");
  model.validate();
  ChannelSampler sampler(cov, d);
  SampleSet set;
  set.x.resize(d, size);
  set.h.resize(d, size);
  for (long m = 0; m < size; ++m) {
    Vec h = sampler.draw(rng);
    set.h.col(m) = h;
    set.x.col(m) = observe(h, model, rng);
  }
  return set;
}

SampleSet gen_mismatched_dataset(const CovarianceSpec& cov, const MismatchSpec& mismatch,
                                 const ObservationModel& model, int d, long size, Rng& rng) {
  if (size < 1) throw std::invalid_argument("dataset size must be >= 1");
  model.validate();
  if (model.distortion != DistortionKind::kLinear)
    throw std::invalid_argument("mismatch requires linear model");
  ChannelSampler base(cov, d);
  ChannelSampler zeta(mismatch.zeta_cov, d);
  const double sigma_n = std::sqrt(model.sigma_n2);
  SampleSet set;
  set.x.resize(d, size);
  set.h.resize(d, size);
  for (long m = 0; m < size; ++m) {
    Vec h_er;
    if (mismatch.mcase == MismatchCase::kCase1) {
      h_er = base.draw(rng) + zeta.draw(rng);
    } else {
      // Case 2: the supplied cov is already the (narrower) training
      // covariance R_er; zeta enters only on the deployment side.
      h_er = base.draw(rng);
    }
    set.h.col(m) = h_er;
    set.x.col(m) = model.tau * h_er + sigma_n * gaussian_vec(d, rng);
  }
  return set;
}

double rapp_apply(double u, const RappParams& p) {
  const double r = std::abs(u) / p.x_sat;
  return u * std::pow(1.0 + std::pow(r, 2.0 * p.omega), -1.0 / (2.0 * p.omega));
}

Vec rapp_apply(const Vec& u, const RappParams& p) {
  Vec out(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) out(i) = rapp_apply(u(i), p);
  return out;
}

double rapp_invert(double x, const RappParams& p) {
  if (!(std::abs(x) < p.x_sat)) throw std::invalid_argument("observation outside distortion range");
  double lo = -p.x_sat * 1e6;
  double hi = p.x_sat * 1e6;
  double mid = 0.0;
  for (int it = 0; it < 180; ++it) {
    mid = 0.5 * (lo + hi);
    if (rapp_apply(mid, p) < x)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-9 * (1.0 + std::abs(mid))) break;
  }
  // Newton polish; g'(u) = (1 + r^(2w))^(-(1 + 1/(2w))).
  double u = 0.5 * (lo + hi);
  for (int it = 0; it < 20; ++it) {
    const double resid = rapp_apply(u, p) - x;
    if (std::abs(resid) <= 1e-12) return u;
    const double r = std::abs(u) / p.x_sat;
    const double deriv = std::pow(1.0 + std::pow(r, 2.0 * p.omega), -(1.0 + 1.0 / (2.0 * p.omega)));
    u -= resid / deriv;
  }
  if (std::abs(rapp_apply(u, p) - x) <= 1e-12) return u;
  throw std::runtime_error("rapp inversion failed to converge");
}

Vec rapp_invert(const Vec& x, const RappParams& p) {
  Vec out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out(i) = rapp_invert(x(i), p);
  return out;
}

}  // namespace chanlab
