#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "chanlab/estimators.hpp"

using namespace chanlab;

namespace {

SampleSet linear_set(int d, double sigma2, double sigma_n2, long n, std::uint64_t seed) {
  ObservationModel model;
  model.sigma_n2 = sigma_n2;
  Rng rng(seed, 0);
  return gen_dataset(CovarianceSpec::diagonal(sigma2), model, d, n, rng);
}

}  // namespace

TEST_CASE("ls_estimate flips with the pilot sign") {
  Vec x(2);
  x << 1.0, -2.0;
  CHECK((ls_estimate(x, 1.0) - x).cwiseAbs().maxCoeff() == 0.0);
  CHECK((ls_estimate(x, -1.0) + x).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(ls_estimate(x, 0.5), std::invalid_argument);
}

TEST_CASE("ls theory matches simulation") {
  CHECK(ls_mse_theory(1, 1.0) == 1.0);
  CHECK(ls_mse_theory(4, 0.1) == doctest::Approx(0.4));
  const SampleSet test = linear_set(4, 1.0, 0.1, 100000, 2001);
  const auto rep = empirical_mse([](const Vec& x) { return ls_estimate(x, 1.0); }, test);
  CHECK(rep.empirical_mse == doctest::Approx(0.4).epsilon(0.02));
}

TEST_CASE("lmmse_estimate diagonal closed form and noiseless limit") {
  const auto cov = CovarianceSpec::diagonal(1.0);
  Vec x(2);
  x << 0.8, -1.4;
  const Vec y = lmmse_estimate(x, cov, 1.0, 1.0);
  CHECK((y - 0.5 * x).cwiseAbs().maxCoeff() < 1e-14);
  const Vec y0 = lmmse_estimate(x, cov, 1e-15, 1.0);
  CHECK((y0 - x).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("lmmse theory matches simulation at d=2") {
  const auto cov = CovarianceSpec::diagonal(1.0);
  CHECK(lmmse_mse_theory(cov, 1, 1.0) == doctest::Approx(0.5));
  CHECK(lmmse_mse_theory(cov, 2, 1.0) == doctest::Approx(1.0));
  const SampleSet test = linear_set(2, 1.0, 1.0, 100000, 2002);
  const auto rep = empirical_mse(
      [&](const Vec& x) { return lmmse_estimate(x, cov, 1.0, 1.0); }, test);
  CHECK(rep.empirical_mse == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("lmmse theory for full covariance and prior-only limit") {
  Mat r(2, 2);
  r << 1.0, 0.4, 0.4, 2.0;
  const auto cov = CovarianceSpec::full(r);
  // Prior dominates as the noise grows.
  CHECK(lmmse_mse_theory(cov, 2, 1e9) == doctest::Approx(r.trace()).epsilon(1e-6));
  // Diagonal fast path agrees with the generic trace formula.
  const auto diag_full = CovarianceSpec::full(0.7 * Mat::Identity(3, 3));
  CHECK(lmmse_mse_theory(diag_full, 3, 0.2) ==
        doctest::Approx(lmmse_mse_theory(CovarianceSpec::diagonal(0.7), 3, 0.2)));
}

TEST_CASE("lmmse never beats ls in theory ordering") {
  Rng rng(31, 0);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = 1 + static_cast<int>(rng.next_u32() % 6);
    const double s2 = 0.1 + 3.0 * rng.uniform();
    const double n2 = std::pow(10.0, -3.0 + 4.0 * rng.uniform());
    CHECK(lmmse_mse_theory(CovarianceSpec::diagonal(s2), d, n2) <= ls_mse_theory(d, n2) + 1e-12);
  }
}

TEST_CASE("estimators are homogeneous in the observation") {
  const auto cov = CovarianceSpec::diagonal(1.3);
  Vec x(3);
  x << 0.2, -0.9, 1.7;
  for (double alpha : {-2.0, 0.5, 3.0}) {
    CHECK((ls_estimate(alpha * x, 1.0) - alpha * ls_estimate(x, 1.0)).cwiseAbs().maxCoeff() <
          1e-12);
    CHECK((lmmse_estimate(alpha * x, cov, 0.7, 1.0) - alpha * lmmse_estimate(x, cov, 0.7, 1.0))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  }
}

TEST_CASE("semianalytic MMSE inverts the distortion before the linear map") {
  ObservationModel model;
  model.sigma_n2 = 0.1;
  model.distortion = DistortionKind::kRapp;
  model.rapp = RappParams{1.5, 1.0};
  const auto cov = CovarianceSpec::diagonal(1.0);

  // x = g(x_sat * 1) has pre-distortion value x_sat exactly.
  Vec u(2);
  u << 1.5, 1.5;
  const Vec x = rapp_apply(u, model.rapp);
  CHECK(x(0) == doctest::Approx(1.5 / std::sqrt(2.0)));
  const Vec est = mmse_rapp_semianalytic(x, cov, model, 1.0);
  const Vec ref = lmmse_estimate(u, cov, model.sigma_n2, 1.0);
  CHECK((est - ref).cwiseAbs().maxCoeff() < 1e-9);

  // Distortion-free limit reduces to the plain linear estimate.
  ObservationModel wide = model;
  wide.rapp.x_sat = 1e8;
  Vec x2(2);
  x2 << 0.3, -1.1;
  const Vec est2 = mmse_rapp_semianalytic(x2, cov, wide, 1.0);
  const Vec ref2 = lmmse_estimate(x2, cov, wide.sigma_n2, 1.0);
  CHECK((est2 - ref2).cwiseAbs().maxCoeff() < 1e-7);

  CHECK_THROWS_AS(mmse_rapp_semianalytic(Vec::Constant(1, 1.6), cov, model, 1.0),
                  std::invalid_argument);
}

TEST_CASE("monte carlo MMSE agrees with the linear-model conditional mean") {
  ObservationModel model;
  model.sigma_n2 = 1.0;  // SNR 0 dB
  const auto cov = CovarianceSpec::diagonal(1.0);
  Vec x(1);
  x << 1.0;
  Rng rng(404, 0);
  const Vec est = mmse_monte_carlo(x, cov, model, 100000, rng);
  const Vec ref = lmmse_estimate(x, cov, model.sigma_n2, 1.0);
  CHECK(est(0) == doctest::Approx(ref(0)).epsilon(0.01));
}

TEST_CASE("monte carlo MMSE agrees with the semianalytic oracle pointwise") {
  ObservationModel model;
  model.sigma_n2 = 0.1;  // SNR 10 dB
  model.distortion = DistortionKind::kRapp;
  model.rapp = RappParams{1.5, 1.0};
  const auto cov = CovarianceSpec::diagonal(1.0);
  Rng data_rng(405, 0);
  const SampleSet pts = gen_dataset(cov, model, 1, 20, data_rng);
  Rng mc_rng(406, 0);
  for (long m = 0; m < pts.size(); ++m) {
    const Vec mc = mmse_monte_carlo(pts.x.col(m), cov, model, 40000, mc_rng);
    const Vec semi = mmse_rapp_semianalytic(pts.x.col(m), cov, model, 1.0);
    CHECK(mc(0) == doctest::Approx(semi(0)).epsilon(0.05).scale(0.3));
  }
}

TEST_CASE("monte carlo MMSE is deterministic under a fixed seed") {
  ObservationModel model;
  model.sigma_n2 = 0.5;
  const auto cov = CovarianceSpec::diagonal(1.0);
  Vec x(2);
  x << 0.4, -0.2;
  Rng a(7, 3), b(7, 3);
  const Vec r1 = mmse_monte_carlo(x, cov, model, 1000, a);
  const Vec r2 = mmse_monte_carlo(x, cov, model, 1000, b);
  CHECK((r1 - r2).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(mmse_monte_carlo(x, cov, model, 999, a), std::invalid_argument);
}

TEST_CASE("monte carlo MMSE halves its error when trials quadruple") {
  ObservationModel model;
  model.sigma_n2 = 1.0;
  const auto cov = CovarianceSpec::diagonal(1.0);
  Vec x(1);
  x << 0.8;
  const double truth = lmmse_estimate(x, cov, model.sigma_n2, 1.0)(0);
  double err_small = 0.0, err_big = 0.0;
  // Average absolute errors over repeats to tame the noise in the check.
  for (int rep = 0; rep < 12; ++rep) {
    Rng r1(900 + rep, 1), r2(900 + rep, 2);
    err_small += std::abs(mmse_monte_carlo(x, cov, model, 4000, r1)(0) - truth);
    err_big += std::abs(mmse_monte_carlo(x, cov, model, 16000, r2)(0) - truth);
  }
  CHECK(err_big < 0.75 * err_small);
}

TEST_CASE("monte carlo MMSE reports degenerate weights") {
  ObservationModel model;
  model.sigma_n2 = 1e-9;
  const auto cov = CovarianceSpec::diagonal(1.0);
  Vec x(1);
  x << 0.5;
  Rng rng(11, 0);
  CHECK_THROWS_WITH_AS(mmse_monte_carlo(x, cov, model, 1000, rng),
                       "degenerate importance weights", std::runtime_error);
}

TEST_CASE("mismatched lmmse scalar form") {
  Vec x(1);
  x << 0.9;
  const Vec y = lmmse_mismatched_estimate(x, CovarianceSpec::diagonal(2.0), 1.0, 1.0);
  CHECK(y(0) == doctest::Approx(2.0 / 3.0 * 0.9));
  // Matching covariance reproduces the accurate estimator.
  const auto cov = CovarianceSpec::diagonal(1.0);
  const Vec same = lmmse_mismatched_estimate(x, cov, 0.3, 1.0);
  const Vec ref = lmmse_estimate(x, cov, 0.3, 1.0);
  CHECK((same - ref).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mismatched lmmse MSE formula at d=1") {
  CHECK(lm_er_mse_diag(1, 1.0, {0.0}, 1.0) == doctest::Approx(0.5));
  CHECK(lm_er_mse_diag(1, 1.0, {1.0}, 1.0) == doctest::Approx(0.5 + 1.0 / 18.0));

  const SampleSet test = linear_set(1, 1.0, 1.0, 100000, 2003);
  const auto rep = empirical_mse(
      [](const Vec& x) { return lmmse_mismatched_estimate(x, CovarianceSpec::diagonal(2.0), 1.0, 1.0); },
      test);
  CHECK(rep.empirical_mse == doctest::Approx(lm_er_mse_diag(1, 1.0, {1.0}, 1.0)).epsilon(0.03));
}

TEST_CASE("mismatched lmmse MSE formula handles shrinking covariances") {
  // eta < 1: signed error variance, denominator uses the assumed covariance.
  const double sigma_n2 = 0.1;
  const double eta = 0.2;
  const SampleSet test = linear_set(1, 1.0, sigma_n2, 200000, 2004);
  const auto rep = empirical_mse(
      [&](const Vec& x) {
        return lmmse_mismatched_estimate(x, CovarianceSpec::diagonal(eta), sigma_n2, 1.0);
      },
      test);
  CHECK(rep.empirical_mse ==
        doctest::Approx(lm_er_mse_diag(1, 1.0, {eta - 1.0}, sigma_n2)).epsilon(0.03));
}

TEST_CASE("dim-factor variant matches simulation at d=2") {
  // The printed formula carries a factor d inside the sum; simulation at
  // d=2 with equal per-antenna errors follows the d-free variant.
  const int d = 2;
  const double sigma_n2 = 0.5;
  const std::vector<double> err2 = {1.0, 1.0};
  const SampleSet test = linear_set(d, 1.0, sigma_n2, 200000, 2005);
  const auto rep = empirical_mse(
      [&](const Vec& x) {
        return lmmse_mismatched_estimate(x, CovarianceSpec::diagonal(2.0), sigma_n2, 1.0);
      },
      test);
  const double verbatim = lm_er_mse_diag(d, 1.0, err2, sigma_n2, true);
  const double dim_free = lm_er_mse_diag(d, 1.0, err2, sigma_n2, false);
  CHECK(rep.empirical_mse == doctest::Approx(dim_free).epsilon(0.03));
  CHECK(verbatim > dim_free);
}

TEST_CASE("mismatch penalties are monotone in the error variances") {
  for (double sigma_n2 : {0.1, 1.0}) {
    double prev_lm = 0.0, prev_dl = 0.0;
    for (int i = 0; i <= 30; ++i) {
      const double e2 = 0.1 * i;
      const double lm = lm_er_mse_diag(1, 1.0, {e2}, sigma_n2);
      const double dl = dl_er_mse_diag(1, 1.0, {e2}, sigma_n2);
      if (i > 0) {
        CHECK(lm >= prev_lm - 1e-15);
        CHECK(dl >= prev_dl - 1e-15);
      }
      prev_lm = lm;
      prev_dl = dl;
    }
  }
}

TEST_CASE("case-1 target map") {
  Vec x(1);
  x << 0.9;
  const auto cov = CovarianceSpec::diagonal(1.0);
  const auto zeta = CovarianceSpec::full(Mat::Identity(1, 1));
  const Vec y = mm_er_estimate(x, cov, zeta, 1.0, 1.0);
  CHECK(y(0) == doctest::Approx(2.0 / 3.0 * 0.9));
  const Vec y0 = mm_er_estimate(x, cov, CovarianceSpec::full(Mat::Zero(1, 1)), 1.0, 1.0);
  CHECK(y0(0) == doctest::Approx(lmmse_estimate(x, cov, 1.0, 1.0)(0)));
}

TEST_CASE("dl mismatch MSE reduces and coincides at d=1") {
  CHECK(dl_er_mse_diag(1, 1.0, {0.0}, 1.0) == doctest::Approx(0.5));
  for (double e2 : {0.3, 1.0, 2.5}) {
    CHECK(dl_er_mse_diag(1, 1.0, {e2}, 0.7) ==
          doctest::Approx(lm_er_mse_diag(1, 1.0, {e2}, 0.7)));
  }
}

TEST_CASE("empirical_mse basics") {
  SampleSet set;
  set.x = Mat::Random(3, 50);
  set.h = set.x;
  const auto zero = empirical_mse([](const Vec& x) { return x; }, set);
  CHECK(zero.empirical_mse == 0.0);
  CHECK(zero.n_samples == 50);

  SampleSet one;
  one.x = Mat::Constant(2, 1, 1.0);
  one.h = Mat::Constant(2, 1, 0.5);
  const auto single = empirical_mse([](const Vec& x) { return x; }, one);
  CHECK(single.empirical_mse == doctest::Approx(2 * 0.25));

  const SampleSet test = linear_set(1, 1.0, 1.0, 100000, 2006);
  const auto ls = empirical_mse([](const Vec& x) { return ls_estimate(x, 1.0); }, test);
  CHECK(ls.empirical_mse == doctest::Approx(1.0).epsilon(0.02));

  SampleSet empty;
  CHECK_THROWS_AS(empirical_mse([](const Vec& x) { return x; }, empty), std::invalid_argument);
}
