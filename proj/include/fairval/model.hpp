#pragma once

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <numbers>
#include <string>
#include <type_traits>
#include <variant>

#include "fairval/dataset.hpp"
#include "fairval/error.hpp"
#include "fairval/gaussian.hpp"
#include "fairval/gp.hpp"

namespace fairval {

/// Bernoulli likelihood, Beta(alpha, beta) prior.
struct BetaBernoulli {
  double alpha = 1.0;
  double beta = 1.0;
};

/// Gaussian likelihood with known noise variance, Gaussian prior on the mean.
struct GaussianMean {
  double prior_mean = 0.0;
  double prior_var = 1.0;
  double noise_var = 1.0;
};

/// y = x'theta + e, e ~ N(0, noise_var), theta ~ N(prior_mean, prior_cov).
/// With `intercept`, a leading column of ones is prepended to the inputs and
/// prior_mean / prior_cov cover it.
struct BayesLinReg {
  VectorXd prior_mean;
  MatrixXd prior_cov;
  double noise_var = 1.0;
  bool intercept = false;

  static BayesLinReg isotropic(Index features, double prior_var, double noise_var,
                               bool intercept = false) {
    Index p = features + (intercept ? 1 : 0);
    return {VectorXd::Zero(p), prior_var * MatrixXd::Identity(p, p), noise_var, intercept};
  }
  Index input_features() const { return prior_mean.size() - (intercept ? 1 : 0); }
};

using BayesianModel = std::variant<BetaBernoulli, GaussianMean, BayesLinReg, GpHyper>;

enum class Family { beta_bernoulli, gaussian_mean, bayes_linreg, gp };

inline Family family_of(const BayesianModel& m) { return static_cast<Family>(m.index()); }

inline const char* to_string(Family f) {
  switch (f) {
    case Family::beta_bernoulli: return "beta-bernoulli";
    case Family::gaussian_mean: return "gaussian-known-var";
    case Family::bayes_linreg: return "bayes-linreg";
    case Family::gp: return "gp";
  }
  return "?";
}

// Sufficient statistics. Gaussian families carry per-row precision weights
// w = model noise / row noise (1 without overrides), so a row with its own
// noise variance contributes w*x, w*x^2 and log w.

struct BernoulliStats {
  Index count = 0;
  double successes = 0.0;
  double failures() const { return static_cast<double>(count) - successes; }
};

struct GaussianStats {
  Index count = 0;
  double weight = 0.0;
  double sum = 0.0;
  double sum_sq = 0.0;
  double sum_log_weight = 0.0;
};

struct LinRegStats {
  Index count = 0;
  double yty = 0.0;
  VectorXd xty;
  MatrixXd xtx;
  double sum_log_weight = 0.0;
};

inline BernoulliStats operator+(const BernoulliStats& a, const BernoulliStats& b) {
  return {a.count + b.count, a.successes + b.successes};
}

inline GaussianStats operator+(const GaussianStats& a, const GaussianStats& b) {
  return {a.count + b.count, a.weight + b.weight, a.sum + b.sum, a.sum_sq + b.sum_sq,
          a.sum_log_weight + b.sum_log_weight};
}

inline LinRegStats operator+(const LinRegStats& a, const LinRegStats& b) {
  if (a.xty.size() != b.xty.size()) throw InputError("linear-regression statistics differ in width");
  return {a.count + b.count, a.yty + b.yty, a.xty + b.xty, a.xtx + b.xtx,
          a.sum_log_weight + b.sum_log_weight};
}

using SuffStats = std::variant<BernoulliStats, GaussianStats, LinRegStats>;

inline SuffStats operator+(const SuffStats& a, const SuffStats& b) {
  if (a.index() != b.index()) throw ConfigError("cannot add statistics of different families");
  return std::visit(
      [&](const auto& x) -> SuffStats {
        return x + std::get<std::decay_t<decltype(x)>>(b);
      },
      a);
}

inline Index stats_count(const SuffStats& s) {
  return std::visit([](const auto& x) { return x.count; }, s);
}

// Posterior (or prior) parameters. `nu` is the pseudo-count: prior
// strength plus observed (weighted) points.

struct BetaParams {
  double alpha = 1.0;
  double beta = 1.0;
  double nu() const { return alpha + beta; }
};

struct GaussianParams {
  double mean = 0.0;
  double var = 1.0;
  double noise_var = 1.0;
  double nu() const { return noise_var / var; }
};

/// Natural form of a Gaussian over weights: precision and shift = precision * mean.
struct LinRegParams {
  MatrixXd precision;
  VectorXd shift;
  double noise_var = 1.0;
  double nu = 0.0;

  VectorXd mean() const { return precision.llt().solve(shift); }
};

using NaturalParams = std::variant<BetaParams, GaussianParams, LinRegParams>;

namespace detail {

inline double lbeta(double a, double b) {
  return boost::math::lgamma(a) + boost::math::lgamma(b) - boost::math::lgamma(a + b);
}

inline double row_weight(const Dataset& d, Index r, double model_noise) {
  if (!d.has_noise_override() || std::isnan(d.noise_var[r])) return 1.0;
  return model_noise / d.noise_var[r];
}

inline MatrixXd design(const Dataset& d, bool intercept) {
  if (!intercept) return d.inputs;
  MatrixXd x(d.size(), d.features() + 1);
  x.col(0).setOnes();
  x.rightCols(d.features()) = d.inputs;
  return x;
}

inline void require_kind(const Dataset& d, OutputKind k, const char* family) {
  if (d.kind != k)
    throw InputError(std::string(family) + " model needs " + to_string(k) + " outputs, got " +
                     to_string(d.kind));
}

}  // namespace detail

inline void validate(const BayesianModel& model) {
  std::visit(
      [](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, BetaBernoulli>) {
          if (!(m.alpha > 0.0) || !(m.beta > 0.0))
            throw ConfigError("Beta prior parameters must be positive");
        } else if constexpr (std::is_same_v<M, GaussianMean>) {
          if (!(m.prior_var > 0.0) || !(m.noise_var > 0.0))
            throw ConfigError("Gaussian prior and noise variances must be positive");
        } else if constexpr (std::is_same_v<M, BayesLinReg>) {
          if (m.prior_cov.rows() != m.prior_mean.size() || m.prior_cov.cols() != m.prior_mean.size())
            throw ConfigError("linear-regression prior covariance does not match prior mean");
          if (m.prior_mean.size() == 0) throw ConfigError("linear regression needs at least one weight");
          if (!(m.noise_var > 0.0)) throw ConfigError("noise variance must be positive");
          if (Eigen::LLT<MatrixXd>(m.prior_cov).info() != Eigen::Success)
            throw ConfigError("linear-regression prior covariance is not positive definite");
        } else {
          m.validate(m.lengthscales.size());
        }
      },
      model);
}

inline NaturalParams prior_params(const BayesianModel& model) {
  return std::visit(
      [](const auto& m) -> NaturalParams {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, BetaBernoulli>) {
          return BetaParams{m.alpha, m.beta};
        } else if constexpr (std::is_same_v<M, GaussianMean>) {
          return GaussianParams{m.prior_mean, m.prior_var, m.noise_var};
        } else if constexpr (std::is_same_v<M, BayesLinReg>) {
          MatrixXd prec = m.prior_cov.llt().solve(MatrixXd::Identity(m.prior_cov.rows(), m.prior_cov.cols()));
          prec = 0.5 * (prec + prec.transpose());
          VectorXd shift = prec * m.prior_mean;
          return LinRegParams{std::move(prec), std::move(shift), m.noise_var, 0.0};
        } else {
          throw UnsupportedError("GP models have no finite-dimensional conjugate parameters");
        }
      },
      model);
}

inline SuffStats suff_stats(const Dataset& data, const BayesianModel& model) {
  return std::visit(
      [&](const auto& m) -> SuffStats {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, BetaBernoulli>) {
          if (data.empty()) return BernoulliStats{};
          detail::require_kind(data, OutputKind::binary, "beta-bernoulli");
          return BernoulliStats{data.size(), data.outputs.sum()};
        } else if constexpr (std::is_same_v<M, GaussianMean>) {
          GaussianStats s;
          if (data.empty()) return s;
          detail::require_kind(data, OutputKind::regression, "gaussian-known-var");
          s.count = data.size();
          for (Index r = 0; r < data.size(); ++r) {
            double w = detail::row_weight(data, r, m.noise_var);
            double y = data.outputs[r];
            s.weight += w;
            s.sum += w * y;
            s.sum_sq += w * y * y;
            s.sum_log_weight += std::log(w);
          }
          return s;
        } else if constexpr (std::is_same_v<M, BayesLinReg>) {
          const Index p = m.prior_mean.size();
          LinRegStats s{0, 0.0, VectorXd::Zero(p), MatrixXd::Zero(p, p), 0.0};
          if (data.empty() && data.features() == 0) return s;
          if (data.features() != m.input_features())
            throw InputError("bayes-linreg model has " + std::to_string(m.input_features()) +
                             " features, data has " + std::to_string(data.features()));
          if (data.empty()) return s;
          detail::require_kind(data, OutputKind::regression, "bayes-linreg");
          MatrixXd x = detail::design(data, m.intercept);
          VectorXd w(data.size());
          for (Index r = 0; r < data.size(); ++r) w[r] = detail::row_weight(data, r, m.noise_var);
          s.count = data.size();
          s.yty = (w.array() * data.outputs.array().square()).sum();
          s.xty = x.transpose() * (w.array() * data.outputs.array()).matrix();
          s.xtx = x.transpose() * w.asDiagonal() * x;
          s.sum_log_weight = w.array().log().sum();
          return s;
        } else {
          throw UnsupportedError("GP models are not summarized by finite sufficient statistics");
        }
      },
      model);
}

inline NaturalParams posterior_update(const NaturalParams& prior, const SuffStats& stats) {
  if (prior.index() != stats.index())
    throw ConfigError("sufficient statistics come from a different model family than the prior");
  return std::visit(
      [&](const auto& p) -> NaturalParams {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, BetaParams>) {
          const auto& s = std::get<BernoulliStats>(stats);
          return BetaParams{p.alpha + s.successes, p.beta + s.failures()};
        } else if constexpr (std::is_same_v<P, GaussianParams>) {
          const auto& s = std::get<GaussianStats>(stats);
          if (s.count == 0) return p;
          double prec = 1.0 / p.var + s.weight / p.noise_var;
          double mean = (p.mean / p.var + s.sum / p.noise_var) / prec;
          return GaussianParams{mean, 1.0 / prec, p.noise_var};
        } else {
          const auto& s = std::get<LinRegStats>(stats);
          if (s.xty.size() != p.shift.size())
            throw ConfigError("linear-regression statistics do not match the prior dimension");
          if (s.count == 0) return p;
          return LinRegParams{p.precision + s.xtx / p.noise_var, p.shift + s.xty / p.noise_var,
                              p.noise_var, p.nu + static_cast<double>(s.count)};
        }
      },
      prior);
}

/// log of the marginal density of data with statistics `stats` when the
/// parameters are distributed according to `params`.
inline double log_evidence(const NaturalParams& params, const SuffStats& stats) {
  if (params.index() != stats.index())
    throw ConfigError("sufficient statistics come from a different model family than the parameters");
  return std::visit(
      [&](const auto& p) -> double {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, BetaParams>) {
          const auto& s = std::get<BernoulliStats>(stats);
          return detail::lbeta(p.alpha + s.successes, p.beta + s.failures()) -
                 detail::lbeta(p.alpha, p.beta);
        } else if constexpr (std::is_same_v<P, GaussianParams>) {
          const auto& s = std::get<GaussianStats>(stats);
          if (s.count == 0) return 0.0;
          const double n = static_cast<double>(s.count);
          const double s2 = p.noise_var;
          double prec = 1.0 / p.var + s.weight / s2;
          double lin = p.mean / p.var + s.sum / s2;
          return -0.5 * (n * std::log(2.0 * std::numbers::pi * s2) - s.sum_log_weight) -
                 0.5 * s.sum_sq / s2 - 0.5 * p.mean * p.mean / p.var + 0.5 * lin * lin / prec -
                 0.5 * std::log(p.var * prec);
        } else {
          const auto& s = std::get<LinRegStats>(stats);
          if (s.count == 0) return 0.0;
          if (s.xty.size() != p.shift.size())
            throw ConfigError("linear-regression statistics do not match the parameter dimension");
          const double n = static_cast<double>(s.count);
          const double s2 = p.noise_var;
          Eigen::LLT<MatrixXd> prior_llt(p.precision);
          MatrixXd post_prec = p.precision + s.xtx / s2;
          Eigen::LLT<MatrixXd> post_llt(post_prec);
          if (prior_llt.info() != Eigen::Success || post_llt.info() != Eigen::Success)
            throw NumericalError("linear-regression precision is not positive definite");
          VectorXd post_shift = p.shift + s.xty / s2;
          return -0.5 * (n * std::log(2.0 * std::numbers::pi * s2) - s.sum_log_weight) -
                 0.5 * s.yty / s2 + 0.5 * post_shift.dot(post_llt.solve(post_shift)) -
                 0.5 * p.shift.dot(prior_llt.solve(p.shift)) - 0.5 * log_det(post_llt) +
                 0.5 * log_det(prior_llt);
        }
      },
      params);
}

/// log p(validation | data) under the model, jointly over validation rows.
inline double log_predictive(const BayesianModel& model, const Dataset& data,
                             const Dataset& validation) {
  if (validation.empty()) throw InputError("validation set is empty");
  if (const auto* gp = std::get_if<GpHyper>(&model)) return gp_log_predictive(data, validation, *gp);
  NaturalParams post = posterior_update(prior_params(model), suff_stats(data, model));
  return log_evidence(post, suff_stats(validation, model));
}

/// Mean over validation rows of log p(row | data), every row scored against
/// the same posterior.
inline double mean_log_predictive(const BayesianModel& model, const Dataset& data,
                                  const Dataset& validation) {
  if (validation.empty()) throw InputError("validation set is empty");
  if (const auto* gp = std::get_if<GpHyper>(&model))
    return gp_mean_log_predictive(data, validation, *gp);
  NaturalParams post = posterior_update(prior_params(model), suff_stats(data, model));
  double total = 0.0;
  for (Index r = 0; r < validation.size(); ++r) {
    Index row[] = {r};
    total += log_evidence(post, suff_stats(take_rows(validation, row), model));
  }
  return total / static_cast<double>(validation.size());
}

}  // namespace fairval
