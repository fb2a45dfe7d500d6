#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "chanlab/channel_model.hpp"

namespace chanlab {

/// A fixed affine map h_hat = weight * x + bias.
struct AffineEstimator {
  Mat weight;
  Vec bias;

  Vec operator()(const Vec& x) const { return weight * x + bias; }
};

struct MseReport {
  double empirical_mse = 0.0;
  std::optional<double> theory_mse;
  long n_samples = 0;
};

/// h_LS = x / tau.
Vec ls_estimate(const Vec& x, double tau);

/// J_LS = d * sigma_n2.
double ls_mse_theory(int d, double sigma_n2);

/// h_LMMSE = tau * R (R + sigma_n2 I)^-1 x.
Vec lmmse_estimate(const Vec& x, const CovarianceSpec& cov, double sigma_n2, double tau);

/// J_LMMSE = tr{ R (I + R / sigma_n2)^-1 }.
double lmmse_mse_theory(const CovarianceSpec& cov, int d, double sigma_n2);

/// Exact MMSE estimate under the Rapp model: invert the (strictly
/// increasing) distortion per component to recover u = tau*h + n, then
/// apply the linear-model conditional mean.
Vec mmse_rapp_semianalytic(const Vec& x, const CovarianceSpec& cov,
                           const ObservationModel& model, double tau);

/// Self-normalized importance-sampling estimate of E{h | x}: channels are
/// drawn from the prior and weighted by the Gaussian likelihood of the
/// pre-distortion residual (the distortion Jacobian is h-independent and
/// cancels). Throws on effective sample size < 50.
Vec mmse_monte_carlo(const Vec& x, const CovarianceSpec& cov, const ObservationModel& model,
                     long trials, Rng& rng);

/// LMMSE machinery evaluated with an assumed covariance R1 in place of
/// the true one.
Vec lmmse_mismatched_estimate(const Vec& x, const CovarianceSpec& cov_assumed,
                              double sigma_n2, double tau);

/// MSE of the mismatched LMMSE estimator for R = sigma2 * I and error
/// eigenvalues sigma_e2 (signed: R1 = R + Omega may shrink R):
///   J_LMMSE + sum_i sigma_e_i^4 sigma_n^4 d /
///             ((sigma2 + sigma_e_i^2 + sigma_n2)^2 (sigma2 + sigma_n2)).
/// include_dim_factor=false drops the printed factor d from the sum; at
/// d=1 the two variants coincide.
double lm_er_mse_diag(int d, double sigma2, const std::vector<double>& sigma_e2_list,
                      double sigma_n2, bool include_dim_factor = true);

/// Target map a DL estimator trained on case-1 mismatched data approaches:
/// tau * (R + Omega_zeta)(R + Omega_zeta + sigma_n2 I)^-1 x.
Vec mm_er_estimate(const Vec& x, const CovarianceSpec& cov, const CovarianceSpec& zeta_cov,
                   double sigma_n2, double tau);

/// Deployment MSE of that target map for R = sigma2 * I:
///   J_LMMSE + sum_i sigma_zeta_i^4 sigma_n^4 /
///             ((sigma2 + sigma_zeta_i^2 + sigma_n2)^2 (sigma2 + sigma_n2)).
double dl_er_mse_diag(int d, double sigma2, const std::vector<double>& sigma_zeta2_list,
                      double sigma_n2);

/// Mean of ||predict(x_m) - h_m||^2 over a test set.
MseReport empirical_mse(const std::function<Vec(const Vec&)>& predict, const SampleSet& test);

}  // namespace chanlab
