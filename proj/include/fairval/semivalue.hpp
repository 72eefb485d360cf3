#pragma once

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairval/coalition.hpp"
#include "fairval/error.hpp"
#include "fairval/parallel.hpp"
#include "fairval/rng.hpp"
#include "fairval/valuation.hpp"

namespace fairval {

enum class WeightFamily { shapley, banzhaf, individual, beta, custom };

inline const char* to_string(WeightFamily f) {
  switch (f) {
    case WeightFamily::shapley: return "shapley";
    case WeightFamily::banzhaf: return "banzhaf";
    case WeightFamily::individual: return "individual";
    case WeightFamily::beta: return "beta";
    case WeightFamily::custom: return "custom";
  }
  return "?";
}

inline double log_binomial(int n, int k) {
  return boost::math::lgamma(n + 1.0) - boost::math::lgamma(k + 1.0) -
         boost::math::lgamma(n - k + 1.0);
}

/// Coalition-size weights w_0..w_{n-1}; a source's semivalue weights its
/// marginal contribution to every coalition of size c by w_c.
struct SemivalueWeights {
  int n = 0;
  std::vector<double> w;
  WeightFamily family = WeightFamily::shapley;
  double alpha = 1.0;  // beta family parameters
  double beta = 1.0;

  /// Strictly positive on every coalition size.
  bool fair() const {
    for (double x : w)
      if (!(x > 0.0)) return false;
    return true;
  }

  /// sum_c w_c * C(n-1, c); equals 1 for a valid semivalue.
  double normalization() const {
    double s = 0.0;
    for (int c = 0; c < n; ++c) s += w[static_cast<std::size_t>(c)] * std::exp(log_binomial(n - 1, c));
    return s;
  }

  std::string label() const {
    if (family == WeightFamily::beta) {
      auto fmt = [](double x) {
        std::string s = std::to_string(x);
        s.erase(s.find_last_not_of('0') + 1);
        if (s.back() == '.') s.pop_back();
        return s;
      };
      return "beta(" + fmt(alpha) + "," + fmt(beta) + ")";
    }
    return to_string(family);
  }
};

inline SemivalueWeights make_weights(WeightFamily family, int n, double alpha = 1.0,
                                     double beta = 1.0) {
  check_source_count(n);
  SemivalueWeights out;
  out.n = n;
  out.family = family;
  out.w.assign(static_cast<std::size_t>(n), 0.0);
  switch (family) {
    case WeightFamily::shapley:
      for (int c = 0; c < n; ++c)
        out.w[static_cast<std::size_t>(c)] = std::exp(-std::log(n) - log_binomial(n - 1, c));
      break;
    case WeightFamily::banzhaf:
      for (auto& x : out.w) x = std::ldexp(1.0, -(n - 1));
      break;
    case WeightFamily::individual:
      out.w[0] = 1.0;
      break;
    case WeightFamily::beta: {
      if (!(alpha >= 1.0) || !(beta >= 1.0))
        throw ConfigError("beta semivalue parameters must be >= 1");
      out.alpha = alpha;
      out.beta = beta;
      using boost::math::lgamma;
      const double lb0 = lgamma(alpha) + lgamma(beta) - lgamma(alpha + beta);
      std::vector<double> logw(static_cast<std::size_t>(n));
      for (int c = 0; c < n; ++c) {
        double a = c + beta;
        double b = n - c - 1 + alpha;
        logw[static_cast<std::size_t>(c)] = lgamma(a) + lgamma(b) - lgamma(a + b) - lb0;
      }
      double norm = 0.0;
      for (int c = 0; c < n; ++c)
        norm += std::exp(logw[static_cast<std::size_t>(c)] + log_binomial(n - 1, c));
      for (int c = 0; c < n; ++c)
        out.w[static_cast<std::size_t>(c)] = std::exp(logw[static_cast<std::size_t>(c)]) / norm;
      break;
    }
    case WeightFamily::custom:
      throw ConfigError("custom weights need explicit values");
  }
  return out;
}

inline SemivalueWeights custom_weights(std::vector<double> w) {
  SemivalueWeights out;
  out.n = static_cast<int>(w.size());
  check_source_count(out.n);
  out.family = WeightFamily::custom;
  out.w = std::move(w);
  for (double x : out.w)
    if (!(x >= 0.0)) throw ConfigError("semivalue weights must be non-negative");
  if (std::abs(out.normalization() - 1.0) > 1e-9)
    throw ConfigError("semivalue weights must satisfy sum_c w_c * C(n-1,c) = 1, got " +
                      std::to_string(out.normalization()));
  return out;
}

/// Parses "shapley", "banzhaf", "individual" or "beta(a,b)".
inline SemivalueWeights parse_weights(std::string_view spec, int n) {
  if (spec == "shapley") return make_weights(WeightFamily::shapley, n);
  if (spec == "banzhaf") return make_weights(WeightFamily::banzhaf, n);
  if (spec == "individual") return make_weights(WeightFamily::individual, n);
  if (spec.starts_with("beta(") && spec.ends_with(")")) {
    std::string inner(spec.substr(5, spec.size() - 6));
    auto comma = inner.find(',');
    if (comma != std::string::npos) {
      try {
        std::size_t used_a = 0, used_b = 0;
        std::string sa = inner.substr(0, comma), sb = inner.substr(comma + 1);
        double a = std::stod(sa, &used_a);
        double b = std::stod(sb, &used_b);
        if (used_a == sa.size() && used_b == sb.size())
          return make_weights(WeightFamily::beta, n, a, b);
      } catch (const std::logic_error&) {
      }
    }
  }
  throw ConfigError("unknown weight family '" + std::string(spec) + "'");
}

/// phi_i = sum over C not containing i of w_|C| (v(C + i) - v(C)).
inline std::vector<double> exact_semivalue(const CharacteristicTable& table,
                                           const SemivalueWeights& weights) {
  if (weights.n != table.n)
    throw ConfigError("weights for " + std::to_string(weights.n) + " sources applied to a game with " +
                      std::to_string(table.n));
  const int n = table.n;
  const std::uint64_t count = std::uint64_t{1} << n;
  std::vector<double> phi(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    const std::uint64_t bit = std::uint64_t{1} << i;
    double total = 0.0;
    for (std::uint64_t m = 0; m < count; ++m) {
      if (m & bit) continue;
      double w = weights.w[static_cast<std::size_t>(std::popcount(m))];
      if (w == 0.0) continue;
      total += w * (table.values[m | bit] - table.values[m]);
    }
    phi[static_cast<std::size_t>(i)] = total;
  }
  return phi;
}

struct SampledEstimate {
  std::vector<double> values;
  std::vector<double> std_errors;
  int permutations = 0;
};

namespace detail {
inline constexpr int permutation_block = 64;
}

/// Permutation-sampling Shapley estimate. Permutations are drawn in fixed
/// blocks, each block with its own generator seeded from (seed, block), and
/// block sums are merged in block order, so the result does not depend on
/// the thread count.
inline SampledEstimate sampled_shapley(const CoalitionValue& value, int n, int permutations,
                                       std::uint64_t seed, int threads = 1) {
  check_source_count(n);
  if (permutations < 1) throw ConfigError("sampled Shapley needs at least one permutation");
  const int blocks = (permutations + detail::permutation_block - 1) / detail::permutation_block;
  const std::size_t un = static_cast<std::size_t>(n);
  std::vector<std::vector<double>> sums(static_cast<std::size_t>(blocks), std::vector<double>(un));
  std::vector<std::vector<double>> squares(static_cast<std::size_t>(blocks), std::vector<double>(un));
  const double empty_value = value(Coalition{});
  parallel_for(static_cast<std::size_t>(blocks), threads, [&](std::size_t b) {
    Rng rng(derive_seed(seed, "permutations", b));
    const int begin = static_cast<int>(b) * detail::permutation_block;
    const int end = std::min(permutations, begin + detail::permutation_block);
    std::vector<int> order(un);
    for (int p = begin; p < end; ++p) {
      for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
      for (int i = n - 1; i > 0; --i) {
        std::uniform_int_distribution<int> pick(0, i);
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
      }
      Coalition c;
      double prev = empty_value;
      for (int i : order) {
        c = c.with(i);
        double cur = value(c);
        double m = cur - prev;
        sums[b][static_cast<std::size_t>(i)] += m;
        squares[b][static_cast<std::size_t>(i)] += m * m;
        prev = cur;
      }
    }
  });
  SampledEstimate est;
  est.permutations = permutations;
  est.values.assign(un, 0.0);
  est.std_errors.assign(un, 0.0);
  std::vector<double> sq(un, 0.0);
  for (int b = 0; b < blocks; ++b)
    for (std::size_t i = 0; i < un; ++i) {
      est.values[i] += sums[static_cast<std::size_t>(b)][i];
      sq[i] += squares[static_cast<std::size_t>(b)][i];
    }
  const double m = permutations;
  for (std::size_t i = 0; i < un; ++i) {
    est.values[i] /= m;
    if (permutations > 1) {
      double var = (sq[i] - m * est.values[i] * est.values[i]) / (m - 1.0);
      est.std_errors[i] = std::sqrt(std::max(var, 0.0) / m);
    }
  }
  return est;
}

/// r_i = min(phi_i / a, B).
inline std::vector<double> budget_cap(std::span<const double> phi, double a, double budget) {
  if (!(a > 0.0)) throw ConfigError("budget scale a must be positive");
  if (!(budget > 0.0)) throw ConfigError("budget B must be positive");
  std::vector<double> r;
  r.reserve(phi.size());
  for (double x : phi) r.push_back(std::min(x / a, budget));
  return r;
}

/// r_i = B phi_i / (max_k phi_k + gamma).
inline std::vector<double> scaled_reward(std::span<const double> phi, double budget, double gamma) {
  if (!(budget > 0.0)) throw ConfigError("budget B must be positive");
  if (phi.empty()) return {};
  double top = *std::max_element(phi.begin(), phi.end());
  double denom = top + gamma;
  if (!(denom > 0.0))
    throw ConfigError("scaled reward needs max_k phi_k + gamma > 0, got " + std::to_string(denom));
  std::vector<double> r;
  r.reserve(phi.size());
  for (double x : phi) r.push_back(budget * x / denom);
  return r;
}

enum class PostProcess { raw, budget_capped, scaled, cross_breve, cross_grave };

inline const char* to_string(PostProcess p) {
  switch (p) {
    case PostProcess::raw: return "raw";
    case PostProcess::budget_capped: return "budget-capped";
    case PostProcess::scaled: return "scaled";
    case PostProcess::cross_breve: return "cross-validation-breve";
    case PostProcess::cross_grave: return "cross-validation-grave";
  }
  return "?";
}

struct RewardReport {
  std::vector<double> rewards;
  SemivalueWeights weights;
  std::string dvf;
  PostProcess post = PostProcess::raw;
  double a = 1.0;
  double budget = 0.0;
  double gamma = 0.0;
  std::uint64_t seed = 0;
  int sampled_permutations = 0;  // 0: exact enumeration

  std::string estimator() const {
    return sampled_permutations ? "sampled(" + std::to_string(sampled_permutations) + ")" : "exact";
  }
  /// The own-game reward path can be gamed by inflating one's own split.
  bool unsafe() const { return post == PostProcess::cross_grave; }
};

}  // namespace fairval
