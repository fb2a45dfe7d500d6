#include "chanlab/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace chanlab {

namespace {

// Shared elimination kernel. Returns false on a pivot below -tol*scale
// (indefinite input); pivots in [-tol*scale, tol*scale] zero the column
// when allow_semidefinite, otherwise fail.
bool factor_lower(const Mat& a, double tol, bool allow_semidefinite, Mat& l) {
  const Eigen::Index n = a.rows();
  l = Mat::Zero(n, n);
  const double scale = std::max(a.diagonal().cwiseAbs().maxCoeff(), 1.0);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = a(j, j) - l.row(j).head(j).squaredNorm();
    if (d > tol * scale) {
      l(j, j) = std::sqrt(d);
      for (Eigen::Index i = j + 1; i < n; ++i) {
        const double s = l.row(i).head(j).dot(l.row(j).head(j));
        l(i, j) = (a(i, j) - s) / l(j, j);
      }
    } else if (allow_semidefinite && d >= -tol * scale) {
      // Semidefinite direction: leave the column zero.
      l(j, j) = 0.0;
    } else {
      return false;
    }
  }
  return true;
}

}  // namespace

Mat cholesky_psd(const Mat& a, double pivot_tol) {
  if (a.rows() != a.cols()) throw std::invalid_argument("covariance not square");
  const double scale = std::max(a.cwiseAbs().maxCoeff(), 1.0);
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw std::invalid_argument("covariance not PSD");
  Mat l;
  if (!factor_lower(a, pivot_tol, /*allow_semidefinite=*/true, l))
    throw std::invalid_argument("covariance not PSD");
  return l;
}

Mat cholesky_spd(const Mat& a) {
  if (a.rows() != a.cols()) throw std::runtime_error("solve failed");
  Mat l;
  if (!factor_lower(a, 0.0, /*allow_semidefinite=*/false, l))
    throw std::runtime_error("solve failed");
  return l;
}

Mat spd_solve(const Mat& a, const Mat& b) {
  const Mat l = cholesky_spd(a);
  // Forward then backward substitution, column by column.
  Mat x(b.rows(), b.cols());
  const Eigen::Index n = a.rows();
  for (Eigen::Index c = 0; c < b.cols(); ++c) {
    Vec y(n);
    for (Eigen::Index i = 0; i < n; ++i)
      y(i) = (b(i, c) - l.row(i).head(i).dot(y.head(i))) / l(i, i);
    for (Eigen::Index i = n - 1; i >= 0; --i) {
      const double s = l.col(i).tail(n - i - 1).dot(x.col(c).tail(n - i - 1));
      x(i, c) = (y(i) - s) / l(i, i);
    }
  }
  const double bnorm = b.cwiseAbs().maxCoeff();
  const double resid = (a * x - b).cwiseAbs().maxCoeff();
  if (!(resid <= 1e-10 * std::max(bnorm, 1e-300))) throw std::runtime_error("solve failed");
  return x;
}

Vec spd_solve(const Mat& a, const Vec& b) {
  Mat x = spd_solve(a, Mat(b));
  return Vec(x.col(0));
}

}  // namespace chanlab
