#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <string>

#include "fairval/error.hpp"

namespace fairval {

/// Cholesky of a symmetric matrix. If the plain factorization fails, adds
/// `start` to the diagonal and multiplies by 10 until `stop` is exceeded.
inline Eigen::LLT<Eigen::MatrixXd> robust_cholesky(const Eigen::MatrixXd& a, double start,
                                                   double stop) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() == Eigen::Success) return llt;
  for (double jitter = start; jitter <= stop * (1.0 + 1e-12); jitter *= 10.0) {
    Eigen::MatrixXd shifted = a;
    shifted.diagonal().array() += jitter;
    llt.compute(shifted);
    if (llt.info() == Eigen::Success) return llt;
  }
  throw NumericalError("matrix of size " + std::to_string(a.rows()) +
                       " is not positive definite after jitter up to " + std::to_string(stop));
}

inline double log_det(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

/// log N(y; mean, cov) from a factorization of cov.
inline double gaussian_log_density(const Eigen::VectorXd& y, const Eigen::VectorXd& mean,
                                   const Eigen::LLT<Eigen::MatrixXd>& cov_llt) {
  Eigen::VectorXd z = cov_llt.matrixL().solve(y - mean);
  const double n = static_cast<double>(y.size());
  return -0.5 * (n * std::log(2.0 * std::numbers::pi) + log_det(cov_llt) + z.squaredNorm());
}

inline double gaussian_log_density(const Eigen::VectorXd& y, const Eigen::VectorXd& mean,
                                   const Eigen::MatrixXd& cov) {
  double scale = cov.size() ? cov.diagonal().cwiseAbs().maxCoeff() : 1.0;
  return gaussian_log_density(y, mean, robust_cholesky(cov, 1e-12 * scale, 1e-6 * scale));
}

/// Univariate log N(y; mean, var).
inline double normal_log_density(double y, double mean, double var) {
  double r = y - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * var) + r * r / var);
}

}  // namespace fairval
