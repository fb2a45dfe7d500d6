#pragma once

#include <Eigen/Dense>

namespace chanlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Lower-triangular factorization A = L L^T for a symmetric positive
/// semidefinite matrix. Pivots within pivot_tol of zero (relative to the
/// largest diagonal entry) zero out their column, so rank-deficient
/// covariances factor cleanly. Throws std::invalid_argument
/// ("covariance not PSD") on a pivot below -pivot_tol or an asymmetric input.
Mat cholesky_psd(const Mat& a, double pivot_tol = 1e-12);

/// Strictly positive definite factorization A = L L^T.
/// Throws std::runtime_error("solve failed") on a non-positive pivot.
Mat cholesky_spd(const Mat& a);

/// Solve A x = b for symmetric positive definite A through the in-repo
/// factorization, with a relative residual check of 1e-10.
Vec spd_solve(const Mat& a, const Vec& b);
Mat spd_solve(const Mat& a, const Mat& b);

}  // namespace chanlab
