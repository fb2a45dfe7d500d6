#include <doctest.h>

#include <stdexcept>

#include "chanlab/linalg.hpp"
#include "chanlab/rng.hpp"

using namespace chanlab;

namespace {

Mat random_spd(int d, Rng& rng, double jitter = 0.5) {
  Mat a(d, d);
  for (int i = 0; i < a.size(); ++i) a(i) = rng.gaussian();
  Mat s = a * a.transpose() / d;
  s.diagonal().array() += jitter;
  return s;
}

}  // namespace

TEST_CASE("cholesky_psd reconstructs SPD matrices") {
  Rng rng(11, 0);
  for (int d : {1, 2, 5, 16}) {
    const Mat a = random_spd(d, rng);
    const Mat l = cholesky_psd(a);
    CHECK((l * l.transpose() - a).cwiseAbs().maxCoeff() < 1e-10 * a.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("cholesky_psd handles rank deficiency") {
  // Rank-1 covariance in 3 dimensions.
  Vec v(3);
  v << 1.0, -0.5, 2.0;
  const Mat a = v * v.transpose();
  const Mat l = cholesky_psd(a);
  CHECK((l * l.transpose() - a).cwiseAbs().maxCoeff() < 1e-10 * a.cwiseAbs().maxCoeff());
  CHECK(cholesky_psd(Mat::Zero(4, 4)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cholesky_psd rejects indefinite and asymmetric inputs") {
  Mat neg = -Mat::Identity(2, 2);
  CHECK_THROWS_WITH_AS(cholesky_psd(neg), "covariance not PSD", std::invalid_argument);
  Mat asym(2, 2);
  asym << 1.0, 0.6, 0.1, 1.0;
  CHECK_THROWS_AS(cholesky_psd(asym), std::invalid_argument);
}

TEST_CASE("spd_solve matches direct inversion") {
  Rng rng(12, 0);
  for (int d : {1, 3, 8, 32}) {
    const Mat a = random_spd(d, rng);
    Vec b(d);
    for (int i = 0; i < d; ++i) b(i) = rng.gaussian();
    const Vec x = spd_solve(a, b);
    CHECK((a * x - b).cwiseAbs().maxCoeff() < 1e-10 * b.cwiseAbs().maxCoeff());
    const Vec x_ref = a.fullPivLu().solve(b);
    CHECK((x - x_ref).cwiseAbs().maxCoeff() < 1e-8 * x_ref.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("spd_solve rejects singular systems") {
  Mat sing = Mat::Zero(2, 2);
  sing(0, 0) = 1.0;
  Vec b(2);
  b << 1.0, 1.0;
  CHECK_THROWS_WITH_AS(spd_solve(sing, b), "solve failed", std::runtime_error);
}
