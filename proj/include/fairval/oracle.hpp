#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "fairval/dataset.hpp"
#include "fairval/error.hpp"
#include "fairval/model.hpp"
#include "fairval/semivalue.hpp"
#include "fairval/valuation.hpp"

// Exhaustive-expectation checks of truthfulness on Beta-Bernoulli instances.
// Expectations are taken under the truthful source's belief: validation
// outcomes (and, for games, the other sources' data) are drawn from the
// posterior predictive given the true dataset.

namespace fairval {

struct OracleVerdict {
  double expected_truthful = 0.0;
  double expected_alt = 0.0;
  double gap = 0.0;
  double kl_total = 0.0;
  bool strict = false;
  std::uint64_t outcomes = 0;  // size of the enumerated outcome space
};

struct RankGap {
  double gap_i = 0.0;
  double gap_k = 0.0;
  bool holds(double tol = 1e-12) const { return gap_i >= gap_k - tol; }
};

struct OracleLimits {
  int max_validation = 16;
  std::uint64_t max_outcomes = 5'000'000;
};

namespace detail {

inline const BetaBernoulli& oracle_model(const BayesianModel& model) {
  const auto* bb = std::get_if<BetaBernoulli>(&model);
  if (!bb) throw UnsupportedError(std::string("the oracle enumerates discrete outcomes; ") +
                                  to_string(family_of(model)) + " is not enumerable");
  fairval::validate(model);
  return *bb;
}

struct Counts {
  double s = 0.0;
  double f = 0.0;
};

inline Counts counts_of(const Dataset& d) {
  if (!d.empty() && d.kind != OutputKind::binary)
    throw InputError("oracle datasets must have binary outputs");
  double s = d.empty() ? 0.0 : d.outputs.sum();
  return {s, static_cast<double>(d.size()) - s};
}

/// log probability of one particular sequence with t successes out of m,
/// given Beta(a, b) beliefs.
inline double log_seq(double a, double b, double t, double m) {
  return lbeta(a + t, b + m - t) - lbeta(a, b);
}

/// Predictive probabilities of every binary sequence of length m, by the
/// chain rule of one-step predictives. Index bit r is the r-th outcome.
inline std::vector<double> sequence_probs(double a, double b, int m) {
  std::vector<double> p(std::size_t{1} << m);
  for (std::size_t seq = 0; seq < p.size(); ++seq) {
    double prob = 1.0, s = 0.0, f = 0.0;
    for (int r = 0; r < m; ++r) {
      double p1 = (a + s) / (a + b + s + f);
      if ((seq >> r) & 1U) {
        prob *= p1;
        s += 1.0;
      } else {
        prob *= 1.0 - p1;
        f += 1.0;
      }
    }
    p[seq] = prob;
  }
  return p;
}

inline double kl_sequences(const std::vector<double>& p, const std::vector<double>& q) {
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) kl += p[i] * std::log(p[i] / q[i]);
  return kl;
}

inline bool distributions_differ(const std::vector<double>& p, const std::vector<double>& q) {
  for (std::size_t i = 0; i < p.size(); ++i)
    if (std::abs(p[i] - q[i]) > 1e-14 * std::max(p[i], q[i])) return true;
  return false;
}

inline void check_validation_size(int m, const OracleLimits& lim) {
  if (m < 1) throw ConfigError("validation size must be at least 1");
  if (m > lim.max_validation)
    throw UnsupportedError("validation size " + std::to_string(m) + " exceeds the enumeration limit of " +
                           std::to_string(lim.max_validation));
}

/// Joint enumeration of (validation successes t, other sources' success
/// counts) with log weights under the truthful source's posterior.
class JointEnumeration {
 public:
  JointEnumeration(double a, double b, std::vector<int> lengths, int m, const OracleLimits& lim)
      : a_(a), b_(b), lengths_(std::move(lengths)), m_(m) {
    std::uint64_t size = static_cast<std::uint64_t>(m + 1);
    for (int len : lengths_) {
      size *= static_cast<std::uint64_t>(len + 1);
      if (size > lim.max_outcomes) break;
    }
    if (size > lim.max_outcomes)
      throw UnsupportedError("joint outcome space has more than " + std::to_string(lim.max_outcomes) +
                             " count configurations (validation " + std::to_string(m) + " points, " +
                             std::to_string(lengths_.size()) + " other sources)");
    size_ = size;
  }

  std::uint64_t size() const { return size_; }

  /// fn(probability, t, others_successes) for every configuration.
  template <class Fn>
  void each(Fn&& fn) const {
    std::vector<int> s(lengths_.size(), 0);
    for (;;) {
      double tot_s = 0.0, tot_len = 0.0, log_mult = 0.0;
      for (std::size_t k = 0; k < s.size(); ++k) {
        tot_s += s[k];
        tot_len += lengths_[k];
        log_mult += log_binomial(lengths_[k], s[k]);
      }
      for (int t = 0; t <= m_; ++t) {
        double lp = log_seq(a_, b_, tot_s + t, tot_len + m_) + log_mult + log_binomial(m_, t);
        fn(std::exp(lp), t, s);
      }
      std::size_t k = 0;
      while (k < s.size() && s[k] == lengths_[k]) s[k++] = 0;
      if (k == s.size()) break;
      ++s[k];
    }
  }

 private:
  double a_, b_;
  std::vector<int> lengths_;
  int m_;
  std::uint64_t size_ = 0;
};

struct GameInstance {
  const BetaBernoulli* model;
  int n;
  int target;
  Counts truth, alt;
  std::vector<int> lengths;  // others' lengths, in source order skipping target
  std::vector<int> others;   // their source indices
};

inline GameInstance game_instance(const BayesianModel& model, const std::vector<Dataset>& true_datasets,
                                  const Dataset& alt_data, int target) {
  GameInstance g{&oracle_model(model), static_cast<int>(true_datasets.size()), target, {}, {}, {}, {}};
  check_source_count(g.n, 16);
  if (target < 0 || target >= g.n) throw ConfigError("target source index out of range");
  g.truth = counts_of(true_datasets[static_cast<std::size_t>(target)]);
  g.alt = counts_of(alt_data);
  for (int k = 0; k < g.n; ++k) {
    if (k == target) continue;
    g.others.push_back(k);
    g.lengths.push_back(static_cast<int>(true_datasets[static_cast<std::size_t>(k)].size()));
  }
  return g;
}

/// Table of v(C) = log p(T|D_C) - log p(T) for one configuration.
inline CharacteristicTable config_table(const GameInstance& g, const Counts& own, int t, int m,
                                        const std::vector<int>& s) {
  std::vector<Counts> c(static_cast<std::size_t>(g.n));
  c[static_cast<std::size_t>(g.target)] = own;
  for (std::size_t k = 0; k < g.others.size(); ++k)
    c[static_cast<std::size_t>(g.others[k])] = {double(s[k]), double(g.lengths[k] - s[k])};
  const double a = g.model->alpha, b = g.model->beta;
  const double base = log_seq(a, b, t, m);
  std::vector<double> v(std::size_t{1} << g.n);
  for (std::size_t mask = 1; mask < v.size(); ++mask) {
    double ss = 0.0, ff = 0.0;
    for (int i = 0; i < g.n; ++i)
      if ((mask >> i) & 1U) {
        ss += c[static_cast<std::size_t>(i)].s;
        ff += c[static_cast<std::size_t>(i)].f;
      }
    v[mask] = log_seq(a + ss, b + ff, t, m) - base;
  }
  return CharacteristicTable(g.n, std::move(v));
}

}  // namespace detail

inline OracleVerdict oracle_dvf_truthfulness(const BayesianModel& model, const Dataset& true_data,
                                             const Dataset& alt_data, int validation_size,
                                             const OracleLimits& lim = {}) {
  const BetaBernoulli& bb = detail::oracle_model(model);
  detail::check_validation_size(validation_size, lim);
  const int m = validation_size;
  const auto t = detail::counts_of(true_data), q = detail::counts_of(alt_data);
  const double a = bb.alpha, b = bb.beta;
  OracleVerdict out;
  out.outcomes = std::uint64_t{1} << m;
  // Value route: v depends on a sequence only through its success count.
  for (int k = 0; k <= m; ++k) {
    double mult = std::exp(log_binomial(m, k));
    double p = std::exp(detail::log_seq(a + t.s, b + t.f, k, m));
    double prior = detail::log_seq(a, b, k, m);
    double v_true = detail::log_seq(a + t.s, b + t.f, k, m) - prior;
    double v_alt = detail::log_seq(a + q.s, b + q.f, k, m) - prior;
    out.expected_truthful += mult * p * v_true;
    out.expected_alt += mult * p * v_alt;
  }
  out.gap = out.expected_truthful - out.expected_alt;
  // Divergence route: full sequence space, chain-rule predictives.
  auto p_true = detail::sequence_probs(a + t.s, b + t.f, m);
  auto p_alt = detail::sequence_probs(a + q.s, b + q.f, m);
  out.kl_total = detail::kl_sequences(p_true, p_alt);
  out.strict = detail::distributions_differ(p_true, p_alt);
  return out;
}

/// Expected semivalue of `target` under truthful vs alternative submission.
/// Entries k != target of `true_datasets` fix the other sources' dataset
/// lengths; their contents are marginalized as exchangeable Bernoulli
/// sequences under the target's posterior.
inline OracleVerdict oracle_semivalue_truthfulness(const BayesianModel& model,
                                                   const std::vector<Dataset>& true_datasets,
                                                   const Dataset& alt_data, int target,
                                                   const SemivalueWeights& weights, int validation_size,
                                                   const OracleLimits& lim = {}) {
  auto g = detail::game_instance(model, true_datasets, alt_data, target);
  if (weights.n != g.n) throw ConfigError("weights do not match the number of sources");
  detail::check_validation_size(validation_size, lim);
  const int m = validation_size;
  const double a = g.model->alpha + g.truth.s, b = g.model->beta + g.truth.f;
  detail::JointEnumeration joint(a, b, g.lengths, m, lim);
  OracleVerdict out;
  out.outcomes = joint.size();
  const auto ti = static_cast<std::size_t>(target);
  joint.each([&](double p, int t, const std::vector<int>& s) {
    out.expected_truthful += p * exact_semivalue(detail::config_table(g, g.truth, t, m, s), weights)[ti];
    out.expected_alt += p * exact_semivalue(detail::config_table(g, g.alt, t, m, s), weights)[ti];
  });
  out.gap = out.expected_truthful - out.expected_alt;

  // Divergence route: sum over coalitions C of others, weighted by w_|C|,
  // of E_{D_C}[KL(p(T | true, D_C) || p(T | alt, D_C))].
  const int r = static_cast<int>(g.others.size());
  for (std::uint32_t sub = 0; sub < (1U << r); ++sub) {
    double w = weights.w[static_cast<std::size_t>(std::popcount(sub))];
    if (w == 0.0) continue;
    int len = 0;
    for (int k = 0; k < r; ++k)
      if ((sub >> k) & 1U) len += g.lengths[static_cast<std::size_t>(k)];
    // The coalition's pooled success count is Beta-binomial given D-bar_i.
    double expected_kl = 0.0;
    for (int sc = 0; sc <= len; ++sc) {
      double p = std::exp(log_binomial(len, sc) + detail::log_seq(a, b, sc, len));
      auto pt = detail::sequence_probs(a + sc, b + len - sc, m);
      auto pa = detail::sequence_probs(g.model->alpha + g.alt.s + sc, g.model->beta + g.alt.f + len - sc, m);
      expected_kl += p * detail::kl_sequences(pt, pa);
      if (w > 0.0 && detail::distributions_differ(pt, pa)) out.strict = true;
    }
    out.kl_total += w * expected_kl;
  }
  return out;
}

/// Expected change, truthful minus alternative, in the semivalues of the
/// deviating source i and of another source k.
inline RankGap oracle_rank_gap(const BayesianModel& model, const std::vector<Dataset>& true_datasets,
                               const Dataset& alt_data, int target, int other,
                               const SemivalueWeights& weights, int validation_size,
                               const OracleLimits& lim = {}) {
  auto g = detail::game_instance(model, true_datasets, alt_data, target);
  if (weights.n != g.n) throw ConfigError("weights do not match the number of sources");
  if (other < 0 || other >= g.n || other == target) throw ConfigError("other source must differ from target");
  detail::check_validation_size(validation_size, lim);
  const int m = validation_size;
  const double a = g.model->alpha + g.truth.s, b = g.model->beta + g.truth.f;
  detail::JointEnumeration joint(a, b, g.lengths, m, lim);
  RankGap out;
  const auto ti = static_cast<std::size_t>(target), ki = static_cast<std::size_t>(other);
  joint.each([&](double p, int t, const std::vector<int>& s) {
    auto phi_true = exact_semivalue(detail::config_table(g, g.truth, t, m, s), weights);
    auto phi_alt = exact_semivalue(detail::config_table(g, g.alt, t, m, s), weights);
    out.gap_i += p * (phi_true[ti] - phi_alt[ti]);
    out.gap_k += p * (phi_true[ki] - phi_alt[ki]);
  });
  return out;
}

}  // namespace fairval
