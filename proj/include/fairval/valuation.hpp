#pragma once

#include <Eigen/Dense>
#include <boost/math/special_functions/digamma.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fairval/coalition.hpp"
#include "fairval/dataset.hpp"
#include "fairval/error.hpp"
#include "fairval/gaussian.hpp"
#include "fairval/gp.hpp"
#include "fairval/model.hpp"
#include "fairval/parallel.hpp"

namespace fairval {

enum class DvfKind { log_score, mean_log_score, cardinality, volume, info_gain, kl_from_prior };

inline const char* to_string(DvfKind k) {
  switch (k) {
    case DvfKind::log_score: return "log-score";
    case DvfKind::mean_log_score: return "mean-log-score";
    case DvfKind::cardinality: return "cardinality";
    case DvfKind::volume: return "volume";
    case DvfKind::info_gain: return "info-gain";
    case DvfKind::kl_from_prior: return "kl-from-prior";
  }
  return "?";
}

inline DvfKind parse_dvf_kind(std::string_view s) {
  for (DvfKind k : {DvfKind::log_score, DvfKind::mean_log_score, DvfKind::cardinality,
                    DvfKind::volume, DvfKind::info_gain, DvfKind::kl_from_prior})
    if (s == to_string(k)) return k;
  throw ConfigError("unknown valuation function '" + std::string(s) + "'");
}

inline bool uses_validation(DvfKind k) {
  return k == DvfKind::log_score || k == DvfKind::mean_log_score;
}

struct DvfSpec {
  DvfKind kind = DvfKind::log_score;
  BayesianModel model = BetaBernoulli{};
  std::optional<Dataset> validation;

  void validate() const {
    fairval::validate(model);
    if (uses_validation(kind) && (!validation || validation->empty()))
      throw ConfigError(std::string(to_string(kind)) + " needs a non-empty validation set");
  }
};

struct DvfValue {
  double value = 0.0;
  bool rank_deficient = false;  // volume of a singular Gram matrix
};

namespace detail {

inline double kl_beta(const BetaParams& q, const BetaParams& p) {
  using boost::math::digamma;
  return lbeta(p.alpha, p.beta) - lbeta(q.alpha, q.beta) + (q.alpha - p.alpha) * digamma(q.alpha) +
         (q.beta - p.beta) * digamma(q.beta) +
         (p.alpha - q.alpha + p.beta - q.beta) * digamma(q.alpha + q.beta);
}

inline double kl_normal(const GaussianParams& q, const GaussianParams& p) {
  double d = q.mean - p.mean;
  return 0.5 * (std::log(p.var / q.var) + (q.var + d * d) / p.var - 1.0);
}

/// KL(posterior || prior) from the two parameter sets.
inline double kl_from_prior(const NaturalParams& post, const NaturalParams& prior) {
  if (const auto* q = std::get_if<BetaParams>(&post)) return kl_beta(*q, std::get<BetaParams>(prior));
  if (const auto* q = std::get_if<GaussianParams>(&post))
    return kl_normal(*q, std::get<GaussianParams>(prior));
  throw UnsupportedError("kl-from-prior is available for beta-bernoulli and gaussian-known-var only");
}

/// 0.5 log det(I + K_D / noise) for the linear-Gaussian families, expressed
/// through the parameter precision: 0.5 (log det post - log det prior).
inline double info_gain_conjugate(const NaturalParams& post, const NaturalParams& prior) {
  if (const auto* q = std::get_if<GaussianParams>(&post))
    return 0.5 * std::log(std::get<GaussianParams>(prior).var / q->var);
  if (const auto* q = std::get_if<LinRegParams>(&post)) {
    const auto& p = std::get<LinRegParams>(prior);
    return 0.5 * (log_det(Eigen::LLT<MatrixXd>(q->precision)) -
                  log_det(Eigen::LLT<MatrixXd>(p.precision)));
  }
  throw UnsupportedError("info-gain needs a Gaussian family (gaussian-known-var, bayes-linreg or gp)");
}

inline DvfValue volume(const Dataset& data) {
  const Index d = data.features();
  if (d == 0) throw ConfigError("volume needs at least one input feature");
  if (data.size() < d) return {0.0, true};
  Eigen::FullPivLU<MatrixXd> lu(data.inputs);
  if (lu.rank() < d) return {0.0, true};
  MatrixXd gram = data.inputs.transpose() * data.inputs;
  Eigen::LLT<MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) return {0.0, true};
  return {std::exp(0.5 * log_det(llt)), false};
}

inline Dataset no_data_like(const Dataset& d) { return Dataset::empty_like(d.features(), d.kind); }

}  // namespace detail

inline DvfValue dvf_evaluate(const DvfSpec& spec, const Dataset& data) {
  switch (spec.kind) {
    case DvfKind::log_score:
    case DvfKind::mean_log_score: {
      spec.validate();
      const Dataset& t = *spec.validation;
      if (data.empty()) return {0.0, false};
      auto score = spec.kind == DvfKind::log_score ? log_predictive : mean_log_predictive;
      return {score(spec.model, data, t) - score(spec.model, detail::no_data_like(t), t), false};
    }
    case DvfKind::cardinality:
      return {static_cast<double>(data.size()), false};
    case DvfKind::volume:
      return detail::volume(data);
    case DvfKind::info_gain: {
      fairval::validate(spec.model);
      if (const auto* gp = std::get_if<GpHyper>(&spec.model)) return {gp_information_gain(data, *gp), false};
      NaturalParams prior = prior_params(spec.model);
      return {detail::info_gain_conjugate(posterior_update(prior, suff_stats(data, spec.model)), prior),
              false};
    }
    case DvfKind::kl_from_prior: {
      fairval::validate(spec.model);
      if (family_of(spec.model) != Family::beta_bernoulli &&
          family_of(spec.model) != Family::gaussian_mean)
        throw UnsupportedError("kl-from-prior is available for beta-bernoulli and gaussian-known-var only");
      NaturalParams prior = prior_params(spec.model);
      return {detail::kl_from_prior(posterior_update(prior, suff_stats(data, spec.model)), prior), false};
    }
  }
  throw ConfigError("unknown valuation function");
}

inline double dvf_value(const DvfSpec& spec, const Dataset& data) {
  return dvf_evaluate(spec, data).value;
}

/// The cooperative game: one value per coalition mask.
struct CharacteristicTable {
  int n = 0;
  std::vector<double> values;
  std::vector<std::uint64_t> flagged;  // masks whose value is a degenerate case (e.g. singular volume)

  CharacteristicTable() = default;
  CharacteristicTable(int sources, std::vector<double> v) : n(sources), values(std::move(v)) {
    check_source_count(n, 30);
    if (values.size() != (std::size_t{1} << n))
      throw ConfigError("characteristic table for " + std::to_string(n) + " sources needs " +
                        std::to_string(std::size_t{1} << n) + " values");
  }

  double operator[](Coalition c) const { return values[c.mask()]; }
  double& operator[](Coalition c) { return values[c.mask()]; }
  double grand() const { return values.back(); }
};

/// Coalition -> value; must be safe to call concurrently.
using CoalitionValue = std::function<double(Coalition)>;

inline Dataset coalition_data(std::span<const Dataset> sources, Coalition c) {
  std::vector<const Dataset*> parts;
  for (int i : c.members()) parts.push_back(&sources[static_cast<std::size_t>(i)]);
  if (parts.empty()) return sources.empty() ? Dataset{} : detail::no_data_like(sources.front());
  return concat(std::span<const Dataset* const>(parts));
}

/// Value of each coalition's pooled data. Conjugate models go through
/// additive sufficient statistics, so a coalition costs one parameter update
/// rather than a pass over its rows.
inline CoalitionValue make_evaluator(std::vector<Dataset> sources, DvfSpec spec) {
  spec.validate();
  const bool conjugate = family_of(spec.model) != Family::gp;
  const bool stats_path = conjugate && spec.kind != DvfKind::volume && spec.kind != DvfKind::cardinality;
  if (spec.kind == DvfKind::cardinality) {
    std::vector<double> sizes;
    for (const auto& s : sources) sizes.push_back(static_cast<double>(s.size()));
    return [sizes](Coalition c) {
      double total = 0.0;
      for (int i : c.members()) total += sizes[static_cast<std::size_t>(i)];
      return total;
    };
  }
  if (!stats_path) {
    auto shared = std::make_shared<const std::vector<Dataset>>(std::move(sources));
    return [shared, spec](Coalition c) {
      if (c.empty() && uses_validation(spec.kind)) return 0.0;
      return dvf_value(spec, coalition_data(*shared, c));
    };
  }
  const NaturalParams prior = prior_params(spec.model);
  std::vector<SuffStats> stats;
  for (const auto& s : sources) stats.push_back(suff_stats(s, spec.model));
  SuffStats zero = suff_stats(Dataset{}, spec.model);
  auto sum_stats = [stats, zero](Coalition c) {
    SuffStats total = zero;
    for (int i : c.members()) total = total + stats[static_cast<std::size_t>(i)];
    return total;
  };
  switch (spec.kind) {
    case DvfKind::log_score: {
      SuffStats t = suff_stats(*spec.validation, spec.model);
      double base = log_evidence(prior, t);
      return [=](Coalition c) {
        if (c.empty()) return 0.0;
        return log_evidence(posterior_update(prior, sum_stats(c)), t) - base;
      };
    }
    case DvfKind::mean_log_score: {
      std::vector<SuffStats> rows;
      const Dataset& v = *spec.validation;
      for (Index r = 0; r < v.size(); ++r) {
        Index idx[] = {r};
        rows.push_back(suff_stats(take_rows(v, idx), spec.model));
      }
      double base = 0.0;
      for (const auto& t : rows) base += log_evidence(prior, t);
      return [=](Coalition c) {
        if (c.empty()) return 0.0;
        NaturalParams post = posterior_update(prior, sum_stats(c));
        double total = 0.0;
        for (const auto& t : rows) total += log_evidence(post, t);
        return (total - base) / static_cast<double>(rows.size());
      };
    }
    case DvfKind::info_gain:
      return [=](Coalition c) {
        return detail::info_gain_conjugate(posterior_update(prior, sum_stats(c)), prior);
      };
    case DvfKind::kl_from_prior:
      if (family_of(spec.model) != Family::beta_bernoulli &&
          family_of(spec.model) != Family::gaussian_mean)
        throw UnsupportedError("kl-from-prior is available for beta-bernoulli and gaussian-known-var only");
      return [=](Coalition c) {
        return detail::kl_from_prior(posterior_update(prior, sum_stats(c)), prior);
      };
    default:
      break;
  }
  throw ConfigError("unhandled valuation function");
}

struct TableOptions {
  int exact_limit = 20;
  int threads = 1;
};

inline void check_exact_limit(int n, const TableOptions& opt) {
  if (n > opt.exact_limit)
    throw ConfigError(std::to_string(n) + " sources exceed the exact-table limit of " +
                      std::to_string(opt.exact_limit) + "; use the sampled Shapley estimator");
}

inline CharacteristicTable build_char_table(const CoalitionValue& value, int n,
                                            const TableOptions& opt = {}) {
  check_source_count(n);
  check_exact_limit(n, opt);
  std::vector<double> values(std::size_t{1} << n);
  parallel_for(values.size(), opt.threads,
               [&](std::size_t m) { values[m] = value(Coalition(m)); });
  return CharacteristicTable(n, std::move(values));
}

inline CharacteristicTable build_char_table(const std::vector<Dataset>& sources, const DvfSpec& spec,
                                            const TableOptions& opt = {}) {
  const int n = static_cast<int>(sources.size());
  check_source_count(n);
  check_exact_limit(n, opt);
  if (spec.kind != DvfKind::volume)
    return build_char_table(make_evaluator(sources, spec), n, opt);
  std::vector<DvfValue> out(std::size_t{1} << n);
  parallel_for(out.size(), opt.threads, [&](std::size_t m) {
    out[m] = dvf_evaluate(spec, coalition_data(sources, Coalition(m)));
  });
  std::vector<double> values;
  std::vector<std::uint64_t> flagged;
  for (std::size_t m = 0; m < out.size(); ++m) {
    values.push_back(out[m].value);
    if (out[m].rank_deficient) flagged.push_back(m);
  }
  CharacteristicTable t(n, std::move(values));
  t.flagged = std::move(flagged);
  return t;
}

/// Log-score games for many validation subsets of one fixed pool. Each
/// coalition's posterior is computed once against the whole pool; a game for
/// a row subset then only scores that subset.
class PooledGame {
 public:
  PooledGame(const std::vector<Dataset>& sources, BayesianModel model, Dataset pool,
             DvfKind kind = DvfKind::log_score, int threads = 1)
      : model_(std::move(model)), pool_(std::move(pool)), kind_(kind),
        n_(static_cast<int>(sources.size())) {
    check_source_count(n_, 20);
    if (!uses_validation(kind_)) throw ConfigError("pooled games score a validation set");
    if (pool_.empty()) throw InputError("validation pool is empty");
    fairval::validate(model_);
    const std::size_t count = std::size_t{1} << n_;
    const Index m = pool_.size();
    const auto* gp = std::get_if<GpHyper>(&model_);
    if (gp) {
      detail::check_gp_inputs(Dataset{}, pool_.features(), *gp);
      if (kind_ == DvfKind::log_score) {
        if (static_cast<double>(m) * m * count > 4e8)
          throw ConfigError("validation pool of " + std::to_string(m) + " rows is too large for " +
                            std::to_string(n_) + " sources");
        means_.resize(count);
        covs_.resize(count);
      } else {
        row_scores_ = MatrixXd(static_cast<Index>(count), m);
      }
      parallel_for(count, threads, [&](std::size_t c) {
        Dataset d = coalition_data(sources, Coalition(c));
        GpFit fit(d, *gp);
        if (kind_ == DvfKind::log_score) {
          GpPosterior post = fit.predict(pool_.inputs);
          post.cov.diagonal().array() += gp->noise_var;
          means_[c] = std::move(post.mean);
          covs_[c] = std::move(post.cov);
        } else {
          auto [mean, var] = fit.marginals(pool_.inputs);
          for (Index r = 0; r < m; ++r)
            row_scores_(static_cast<Index>(c), r) =
                normal_log_density(pool_.outputs[r], mean[r], var[r] + gp->noise_var);
        }
      });
    } else {
      NaturalParams prior = prior_params(model_);
      std::vector<SuffStats> stats;
      for (const auto& s : sources) stats.push_back(suff_stats(s, model_));
      params_.resize(count);
      for (std::size_t c = 0; c < count; ++c) {
        SuffStats total = suff_stats(Dataset{}, model_);
        for (int i : Coalition(c).members()) total = total + stats[static_cast<std::size_t>(i)];
        params_[c] = posterior_update(prior, total);
      }
      if (kind_ == DvfKind::mean_log_score) {
        row_scores_ = MatrixXd(static_cast<Index>(count), m);
        for (Index r = 0; r < m; ++r) {
          Index idx[] = {r};
          SuffStats t = suff_stats(take_rows(pool_, idx), model_);
          for (std::size_t c = 0; c < count; ++c)
            row_scores_(static_cast<Index>(c), r) = log_evidence(params_[c], t);
        }
      }
    }
  }

  int sources() const { return n_; }
  const Dataset& pool() const { return pool_; }

  /// The game whose validation set is the given pool rows.
  CharacteristicTable table(std::span<const Index> rows) const {
    if (rows.empty()) throw InputError("validation subset is empty");
    const std::size_t count = std::size_t{1} << n_;
    std::vector<double> scores(count);
    if (kind_ == DvfKind::mean_log_score) {
      for (std::size_t c = 0; c < count; ++c) {
        double total = 0.0;
        for (Index r : rows) total += row_scores_(static_cast<Index>(c), r);
        scores[c] = total / static_cast<double>(rows.size());
      }
    } else if (!means_.empty()) {
      const Index k = static_cast<Index>(rows.size());
      VectorXd y(k);
      for (Index a = 0; a < k; ++a) y[a] = pool_.outputs[rows[static_cast<std::size_t>(a)]];
      for (std::size_t c = 0; c < count; ++c) {
        VectorXd mu(k);
        MatrixXd cov(k, k);
        for (Index a = 0; a < k; ++a) {
          Index ra = rows[static_cast<std::size_t>(a)];
          mu[a] = means_[c][ra];
          for (Index b = 0; b < k; ++b) cov(a, b) = covs_[c](ra, rows[static_cast<std::size_t>(b)]);
        }
        scores[c] = gaussian_log_density(y, mu, cov);
      }
    } else {
      SuffStats t = suff_stats(take_rows(pool_, rows), model_);
      for (std::size_t c = 0; c < count; ++c) scores[c] = log_evidence(params_[c], t);
    }
    std::vector<double> values(count);
    for (std::size_t c = 1; c < count; ++c) values[c] = scores[c] - scores[0];
    return CharacteristicTable(n_, std::move(values));
  }

 private:
  BayesianModel model_;
  Dataset pool_;
  DvfKind kind_;
  int n_;
  std::vector<VectorXd> means_;
  std::vector<MatrixXd> covs_;
  std::vector<NaturalParams> params_;
  MatrixXd row_scores_;
};

}  // namespace fairval
