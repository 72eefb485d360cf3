#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <string>
#include <utility>

#include "fairval/dataset.hpp"
#include "fairval/error.hpp"
#include "fairval/gaussian.hpp"

namespace fairval {

/// Squared-exponential ARD kernel hyperparameters, fixed by agreement.
struct GpHyper {
  VectorXd lengthscales;
  double signal_var = 1.0;
  double noise_var = 1.0;
  double jitter = 0.0;

  static GpHyper defaults(Index features) {
    GpHyper h;
    h.lengthscales = VectorXd::Ones(features);
    return h;
  }

  void validate(Index features) const {
    if (lengthscales.size() != features)
      throw ConfigError("GP has " + std::to_string(lengthscales.size()) +
                        " lengthscales but data has " + std::to_string(features) + " features");
    if ((lengthscales.array() <= 0.0).any())
      throw ConfigError("GP lengthscales must be strictly positive");
    if (!(signal_var > 0.0)) throw ConfigError("GP signal variance must be positive");
    if (!(noise_var > 0.0)) throw ConfigError("GP noise variance must be positive");
    if (!(jitter >= 0.0)) throw ConfigError("GP jitter must be non-negative");
  }
};

/// Latent posterior of f at test inputs.
struct GpPosterior {
  VectorXd mean;
  MatrixXd cov;
};

inline MatrixXd se_kernel(const MatrixXd& a, const MatrixXd& b, const GpHyper& h) {
  const VectorXd inv = h.lengthscales.cwiseInverse();
  MatrixXd as = a * inv.asDiagonal();
  MatrixXd bs = b * inv.asDiagonal();
  VectorXd an = as.rowwise().squaredNorm();
  VectorXd bn = bs.rowwise().squaredNorm();
  MatrixXd d2 = (-2.0 * as * bs.transpose()).colwise() + an;
  d2.rowwise() += bn.transpose();
  return h.signal_var * (-0.5 * d2.array().max(0.0)).exp().matrix();
}

namespace detail {

inline double gp_jitter_start(const GpHyper& h) { return 1e-9 * h.signal_var; }
inline double gp_jitter_stop(const GpHyper& h) { return 1e-3 * h.signal_var; }

inline void check_gp_inputs(const Dataset& train, Index test_features, const GpHyper& h) {
  h.validate(test_features);
  if (!train.empty() && train.features() != test_features)
    throw InputError("GP training data has " + std::to_string(train.features()) +
                     " features, test inputs have " + std::to_string(test_features));
  if (train.kind != OutputKind::regression && !train.empty())
    throw InputError("GP regression requires real-valued outputs");
}

}  // namespace detail

/// Factorized training side, reusable across test sets.
class GpFit {
 public:
  GpFit(const Dataset& train, const GpHyper& hyper) : hyper_(hyper), train_inputs_(train.inputs) {
    if (train.empty()) return;
    MatrixXd k = se_kernel(train.inputs, train.inputs, hyper_);
    for (Index r = 0; r < train.size(); ++r) {
      double nv = hyper_.noise_var;
      if (train.has_noise_override() && !std::isnan(train.noise_var[r])) nv = train.noise_var[r];
      k(r, r) += nv + hyper_.jitter;
    }
    llt_ = robust_cholesky(k, detail::gp_jitter_start(hyper_), detail::gp_jitter_stop(hyper_));
    alpha_ = llt_->solve(train.outputs);
  }

  bool trained() const { return llt_.has_value(); }
  const GpHyper& hyper() const { return hyper_; }

  /// Posterior mean and covariance at `test`.
  GpPosterior predict(const MatrixXd& test) const {
    GpPosterior post;
    if (!trained()) {
      post.mean = VectorXd::Zero(test.rows());
      post.cov = se_kernel(test, test, hyper_);
      return post;
    }
    MatrixXd kdx = se_kernel(train_inputs_, test, hyper_);
    post.mean = kdx.transpose() * alpha_;
    MatrixXd v = llt_->matrixL().solve(kdx);
    MatrixXd cov = se_kernel(test, test, hyper_);
    cov.noalias() -= v.transpose() * v;
    post.cov = 0.5 * (cov + cov.transpose());
    for (Index i = 0; i < test.rows(); ++i) post.cov(i, i) = std::max(post.cov(i, i), 0.0);
    return post;
  }

  /// Posterior mean and latent variance at each test point.
  std::pair<VectorXd, VectorXd> marginals(const MatrixXd& test) const {
    const Index m = test.rows();
    if (!trained()) return {VectorXd::Zero(m), VectorXd::Constant(m, hyper_.signal_var)};
    MatrixXd kdx = se_kernel(train_inputs_, test, hyper_);
    MatrixXd v = llt_->matrixL().solve(kdx);
    VectorXd var = VectorXd::Constant(m, hyper_.signal_var) - v.colwise().squaredNorm().transpose();
    return {kdx.transpose() * alpha_, var.cwiseMax(0.0)};
  }

 private:
  GpHyper hyper_;
  MatrixXd train_inputs_;
  std::optional<Eigen::LLT<MatrixXd>> llt_;
  VectorXd alpha_;
};

inline GpPosterior gp_posterior(const Dataset& train, const MatrixXd& test_inputs,
                                const GpHyper& hyper) {
  detail::check_gp_inputs(train, test_inputs.cols(), hyper);
  return GpFit(train, hyper).predict(test_inputs);
}

/// log N(y*; mu, Sigma + noise I): the joint predictive density of the
/// observed validation outputs.
inline double gp_log_predictive(const Dataset& train, const Dataset& validation,
                                const GpHyper& hyper) {
  if (validation.empty()) throw InputError("validation set is empty");
  detail::check_gp_inputs(train, validation.features(), hyper);
  GpPosterior post = GpFit(train, hyper).predict(validation.inputs);
  post.cov.diagonal().array() += hyper.noise_var;
  return gaussian_log_density(validation.outputs, post.mean, post.cov);
}

/// Average of per-point predictive log densities, each against the same
/// posterior.
inline double gp_mean_log_predictive(const Dataset& train, const Dataset& validation,
                                     const GpHyper& hyper) {
  if (validation.empty()) throw InputError("validation set is empty");
  detail::check_gp_inputs(train, validation.features(), hyper);
  auto [mean, var] = GpFit(train, hyper).marginals(validation.inputs);
  double total = 0.0;
  for (Index i = 0; i < validation.size(); ++i)
    total += normal_log_density(validation.outputs[i], mean[i], var[i] + hyper.noise_var);
  return total / static_cast<double>(validation.size());
}

/// 0.5 log det(I + K_D / noise): information gain on the latent function.
inline double gp_information_gain(const Dataset& data, const GpHyper& hyper) {
  if (data.empty()) return 0.0;
  hyper.validate(data.features());
  MatrixXd k = se_kernel(data.inputs, data.inputs, hyper) / hyper.noise_var;
  k.diagonal().array() += 1.0;
  return 0.5 * log_det(robust_cholesky(k, 1e-12, 1e-6));
}

}  // namespace fairval
