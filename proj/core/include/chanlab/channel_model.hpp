#pragma once

#include <cstdint>

#include "chanlab/linalg.hpp"
#include "chanlab/rng.hpp"

namespace chanlab {

enum class CovKind { kDiagonal, kFull };

/// Channel covariance: either sigma2 * I (diagonal) or an explicit
/// symmetric positive semidefinite matrix.
struct CovarianceSpec {
  CovKind kind = CovKind::kDiagonal;
  double sigma2 = 1.0;
  Mat matrix;

  static CovarianceSpec diagonal(double sigma2);
  static CovarianceSpec full(Mat m);

  /// Materialize as a dense d x d matrix.
  Mat dense(int d) const;

  /// Throws std::invalid_argument on an invariant violation or a
  /// dimension mismatch against d.
  void validate(int d) const;
};

/// Rapp saturation nonlinearity x = u * (1 + (|u|/x_sat)^(2w))^(-1/(2w)).
struct RappParams {
  double x_sat = 1.5;
  double omega = 1.0;
};

enum class DistortionKind { kLinear, kRapp };

/// Pilot observation x = distort(tau * h + n), n ~ N(0, sigma_n2 * I).
struct ObservationModel {
  double tau = 1.0;
  double sigma_n2 = 1.0;
  DistortionKind distortion = DistortionKind::kLinear;
  RappParams rapp;

  void validate() const;
};

/// Input-output sample set; one column per (x, h) pair.
struct SampleSet {
  Mat x;
  Mat h;

  int dim() const { return static_cast<int>(x.rows()); }
  long size() const { return static_cast<long>(x.cols()); }
  bool empty() const { return x.cols() == 0; }
};

enum class MismatchCase { kCase1, kCase2 };

/// Mismatched-training-data description: the zero-mean error vector's
/// covariance plus which side of the mismatch it sits on. In case 1 the
/// training channel is h + zeta (broader than deployment); in case 2 the
/// deployment channel is h_er + zeta (broader than training).
struct MismatchSpec {
  MismatchCase mcase = MismatchCase::kCase1;
  CovarianceSpec zeta_cov;
};

/// Draw h ~ N(0, R). Full covariances go through the in-repo
/// semidefinite factorization.
Vec sample_channel(const CovarianceSpec& cov, int d, Rng& rng);

/// One pilot observation of h under the model.
Vec observe(const Vec& h, const ObservationModel& model, Rng& rng);

/// i.i.d. sample set of (x, h) pairs.
SampleSet gen_dataset(const CovarianceSpec& cov, const ObservationModel& model,
                      int d, long size, Rng& rng);

/// Mismatched training set. Case 1: h_er = h + zeta with h ~ N(0, cov).
/// Case 2: h_er ~ N(0, cov) directly (cov is the narrower training
/// covariance; the deployment channel is generated separately). Pairs are
/// (x_er, h_er) with x_er = tau * h_er + n. Linear model only.
SampleSet gen_mismatched_dataset(const CovarianceSpec& cov, const MismatchSpec& mismatch,
                                 const ObservationModel& model, int d, long size, Rng& rng);

double rapp_apply(double u, const RappParams& p);
Vec rapp_apply(const Vec& u, const RappParams& p);

/// Invert the Rapp map by bracketing bisection plus Newton polish to a
/// residual of 1e-12. Requires |x| < x_sat.
double rapp_invert(double x, const RappParams& p);
Vec rapp_invert(const Vec& x, const RappParams& p);

}  // namespace chanlab
