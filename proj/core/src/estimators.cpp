#include "chanlab/estimators.hpp"

#include <cmath>
#include <stdexcept>

namespace chanlab {

namespace {

void check_tau(double tau) {
  if (tau != 1.0 && tau != -1.0) throw std::invalid_argument("pilot tau must be +1 or -1");
}

// tau * R (R + sigma_n2 I)^-1 x for an arbitrary covariance.
Vec wiener_apply(const Mat& r, double sigma_n2, const Vec& x, double tau) {
  Mat a = r;
  a.diagonal().array() += sigma_n2;
  return tau * (r * spd_solve(a, x));
}

}  // namespace

Vec ls_estimate(const Vec& x, double tau) {
  check_tau(tau);
  return x / tau;
}

double ls_mse_theory(int d, double sigma_n2) {
  if (d < 1) throw std::invalid_argument("dimension must be positive");
  if (!(sigma_n2 > 0.0)) throw std::invalid_argument("sigma_n2 must be positive");
  return d * sigma_n2;
}

Vec lmmse_estimate(const Vec& x, const CovarianceSpec& cov, double sigma_n2, double tau) {
  check_tau(tau);
  const int d = static_cast<int>(x.size());
  cov.validate(d);
  if (cov.kind == CovKind::kDiagonal) {
    return (tau * cov.sigma2 / (cov.sigma2 + sigma_n2)) * x;
  }
  return wiener_apply(cov.matrix, sigma_n2, x, tau);
}

double lmmse_mse_theory(const CovarianceSpec& cov, int d, double sigma_n2) {
  cov.validate(d);
  if (!(sigma_n2 > 0.0)) throw std::invalid_argument("sigma_n2 must be positive");
  if (cov.kind == CovKind::kDiagonal) {
    return d * cov.sigma2 * sigma_n2 / (cov.sigma2 + sigma_n2);
  }
  // tr{R (I + R/sigma_n2)^-1}; the argument is SPD for any PSD R.
  Mat m = Mat::Identity(d, d) + cov.matrix / sigma_n2;
  return spd_solve(m, cov.matrix).trace();
}

Vec mmse_rapp_semianalytic(const Vec& x, const CovarianceSpec& cov,
                           const ObservationModel& model, double tau) {
  check_tau(tau);
  if (model.distortion != DistortionKind::kRapp)
    throw std::invalid_argument("semianalytic MMSE requires rapp distortion");
  model.validate();
  const Vec u = rapp_invert(x, model.rapp);
  return lmmse_estimate(u, cov, model.sigma_n2, tau);
}

Vec mmse_monte_carlo(const Vec& x, const CovarianceSpec& cov, const ObservationModel& model,
                     long trials, Rng& rng) {
  if (trials < 1000) throw std::invalid_argument("mmse_monte_carlo requires trials >= 1e3");
  model.validate();
  const int d = static_cast<int>(x.size());
  cov.validate(d);

  const Vec u = (model.distortion == DistortionKind::kRapp) ? rapp_invert(x, model.rapp) : x;

  // Factor the prior once.
  const Mat r = cov.dense(d);
  const Mat chol = cholesky_psd(r);

  // Two passes with identical draws: first the max exponent for a stable
  // softmax, then the weighted mean.
  const double inv2s = 1.0 / (2.0 * model.sigma_n2);
  Rng pass1 = rng;
  double max_e = -std::numeric_limits<double>::infinity();
  for (long t = 0; t < trials; ++t) {
    Vec z(d);
    for (int i = 0; i < d; ++i) z(i) = pass1.gaussian();
    const Vec h = chol * z;
    const double e = -inv2s * (u - model.tau * h).squaredNorm();
    if (e > max_e) max_e = e;
  }
  double wsum = 0.0, w2sum = 0.0;
  Vec acc = Vec::Zero(d);
  for (long t = 0; t < trials; ++t) {
    Vec z(d);
    for (int i = 0; i < d; ++i) z(i) = rng.gaussian();
    const Vec h = chol * z;
    const double e = -inv2s * (u - model.tau * h).squaredNorm();
    const double w = std::exp(e - max_e);
    wsum += w;
    w2sum += w * w;
    acc += w * h;
  }
  const double ess = wsum * wsum / w2sum;
  if (!(ess >= 50.0)) throw std::runtime_error("degenerate importance weights");
  return acc / wsum;
}

Vec lmmse_mismatched_estimate(const Vec& x, const CovarianceSpec& cov_assumed,
                              double sigma_n2, double tau) {
  return lmmse_estimate(x, cov_assumed, sigma_n2, tau);
}

double lm_er_mse_diag(int d, double sigma2, const std::vector<double>& sigma_e2_list,
                      double sigma_n2, bool include_dim_factor) {
  if (static_cast<int>(sigma_e2_list.size()) != d)
    throw std::invalid_argument("sigma_e2_list length must equal d");
  const double base = lmmse_mse_theory(CovarianceSpec::diagonal(sigma2), d, sigma_n2);
  double extra = 0.0;
  for (double se2 : sigma_e2_list) {
    const double s1 = sigma2 + se2;  // i-th eigenvalue of R1
    if (!(s1 > 0.0)) throw std::invalid_argument("assumed covariance not PSD");
    const double num = se2 * se2 * sigma_n2 * sigma_n2 * (include_dim_factor ? d : 1);
    extra += num / ((s1 + sigma_n2) * (s1 + sigma_n2) * (sigma2 + sigma_n2));
  }
  return base + extra;
}

Vec mm_er_estimate(const Vec& x, const CovarianceSpec& cov, const CovarianceSpec& zeta_cov,
                   double sigma_n2, double tau) {
  check_tau(tau);
  const int d = static_cast<int>(x.size());
  cov.validate(d);
  zeta_cov.validate(d);
  const Mat r_er = cov.dense(d) + zeta_cov.dense(d);
  return wiener_apply(r_er, sigma_n2, x, tau);
}

double dl_er_mse_diag(int d, double sigma2, const std::vector<double>& sigma_zeta2_list,
                      double sigma_n2) {
  if (static_cast<int>(sigma_zeta2_list.size()) != d)
    throw std::invalid_argument("sigma_zeta2_list length must equal d");
  const double base = lmmse_mse_theory(CovarianceSpec::diagonal(sigma2), d, sigma_n2);
  double extra = 0.0;
  for (double sz2 : sigma_zeta2_list) {
    const double tot = sigma2 + sz2 + sigma_n2;
    if (!(tot > 0.0)) throw std::invalid_argument("training covariance not PSD");
    extra += sz2 * sz2 * sigma_n2 * sigma_n2 / (tot * tot * (sigma2 + sigma_n2));
  }
  return base + extra;
}

MseReport empirical_mse(const std::function<Vec(const Vec&)>& predict, const SampleSet& test) {
  if (test.empty()) throw std::invalid_argument("empty test set");
  double acc = 0.0;
  for (long m = 0; m < test.size(); ++m) {
    acc += (predict(test.x.col(m)) - Vec(test.h.col(m))).squaredNorm();
  }
  MseReport rep;
  rep.empirical_mse = acc / static_cast<double>(test.size());
  rep.n_samples = test.size();
  return rep;
}

}  // namespace chanlab
