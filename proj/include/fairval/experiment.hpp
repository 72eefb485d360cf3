#pragma once

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "fairval/datagen.hpp"
#include "fairval/dataset.hpp"
#include "fairval/error.hpp"
#include "fairval/mechanism.hpp"
#include "fairval/model.hpp"
#include "fairval/parallel.hpp"
#include "fairval/rng.hpp"
#include "fairval/semivalue.hpp"
#include "fairval/valuation.hpp"

namespace fairval {

using Json = nlohmann::json;

/// Where a dataset comes from.
struct SourceDef {
  enum class Kind { friedman, bernoulli, csv, inline_data } kind = Kind::friedman;
  Index points = 0;
  double alpha = 0.0, beta = 0.0, noise_sd = 1.0;  // friedman
  double p = 0.5;                                  // bernoulli
  std::string path, output_column;                 // csv
  OutputKind output_kind = OutputKind::regression;
  std::vector<double> outputs;                     // inline
  std::vector<std::vector<double>> inputs;
  std::optional<double> noise_var;                 // per-row likelihood noise override
};

enum class RewardKind { none, budget, scaled, cross_validation };

struct RewardDef {
  RewardKind kind = RewardKind::none;
  double a = 1.0;
  double budget = 1.0;
  double gamma = 0.0;
  double validation_frac = 0.25;
  bool grave = false;
};

enum class SweepAxis {
  none, strategy, validation_fraction, validation_noise, friedman_alpha, friedman_beta,
  sorted_fraction, weights
};

inline const char* to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::none: return "none";
    case SweepAxis::strategy: return "strategy";
    case SweepAxis::validation_fraction: return "validation-fraction";
    case SweepAxis::validation_noise: return "validation-noise";
    case SweepAxis::friedman_alpha: return "friedman-alpha";
    case SweepAxis::friedman_beta: return "friedman-beta";
    case SweepAxis::sorted_fraction: return "sorted-fraction";
    case SweepAxis::weights: return "weights";
  }
  return "?";
}

struct SweepDef {
  SweepAxis axis = SweepAxis::none;
  int source = 0;  // strategy axis: whose strategy varies
  std::vector<double> numbers;
  std::vector<std::string> labels;  // strategy codes or weight families
  std::vector<Strategy> strategies;

  std::size_t size() const {
    if (axis == SweepAxis::none) return 1;
    return axis == SweepAxis::strategy || axis == SweepAxis::weights ? labels.size() : numbers.size();
  }
};

struct ExperimentConfig {
  Json model_json;
  std::vector<SourceDef> sources;
  std::optional<SourceDef> validation;
  double validation_subset = 0.5;
  bool standardize = true;
  std::vector<Strategy> strategies;
  std::vector<std::string> strategy_labels;
  DvfKind dvf = DvfKind::log_score;
  std::string weights = "shapley";
  RewardDef reward;
  PerturbSpec perturb;
  SweepDef sweep;
  int repeats = 1;
  std::uint64_t seed = 0;
  int permutations = 3000;
  int exact_limit = 20;
  int threads = 1;
  Json echo;  // resolved configuration document

  int n() const { return static_cast<int>(sources.size()); }
};

namespace detail {

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

inline void require_object(const Json& j, const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + " must be an object");
}

/// Unknown keys are rejected so that typos do not silently fall back to defaults.
inline void check_keys(const Json& j, const std::string& what, std::initializer_list<std::string_view> known) {
  require_object(j, what);
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("unknown key '" + key + "' in " + what);
}

inline SourceDef parse_source(const Json& j, const std::string& what) {
  check_keys(j, what, {"csv", "output_column", "outputs", "inputs", "generator", "alpha", "beta", "noise_sd",
                       "p", "points", "kind", "noise_var", "copies"});
  SourceDef d;
  if (j.contains("csv")) {
    d.kind = SourceDef::Kind::csv;
    d.path = get_or<std::string>(j, "csv", "");
    d.output_column = get_or<std::string>(j, "output_column", "y");
  } else if (j.contains("outputs")) {
    d.kind = SourceDef::Kind::inline_data;
    d.outputs = get_or<std::vector<double>>(j, "outputs", {});
    d.inputs = get_or<std::vector<std::vector<double>>>(j, "inputs", {});
  } else {
    std::string gen = get_or<std::string>(j, "generator", "friedman");
    if (gen == "friedman") {
      d.kind = SourceDef::Kind::friedman;
      d.alpha = get_or(j, "alpha", 0.0);
      d.beta = get_or(j, "beta", 0.0);
      d.noise_sd = get_or(j, "noise_sd", 1.0);
    } else if (gen == "bernoulli") {
      d.kind = SourceDef::Kind::bernoulli;
      d.output_kind = OutputKind::binary;
      d.p = get_or(j, "p", 0.5);
      if (!(d.p >= 0.0 && d.p <= 1.0)) throw ConfigError(what + ": p must be in [0, 1]");
    } else {
      throw ConfigError(what + ": unknown generator '" + gen + "'");
    }
    long long pts = get_or<long long>(j, "points", 0);
    if (pts < 0) throw ConfigError(what + ": points must be non-negative");
    d.points = static_cast<Index>(pts);
  }
  std::string kind = get_or<std::string>(j, "kind", d.output_kind == OutputKind::binary ? "binary" : "regression");
  if (kind == "binary") d.output_kind = OutputKind::binary;
  else if (kind == "regression") d.output_kind = OutputKind::regression;
  else throw ConfigError(what + ": kind must be 'regression' or 'binary'");
  if (j.contains("noise_var")) {
    double v = get_or(j, "noise_var", 1.0);
    if (!(v > 0.0)) throw ConfigError(what + ": noise_var must be positive");
    d.noise_var = v;
  }
  return d;
}

inline Strategy parse_strategy_json(const Json& j) {
  if (j.is_string()) return parse_strategy(j.get<std::string>());
  check_keys(j, "strategy", {"kind", "frac", "level", "copies", "offset", "fill", "sd"});
  Strategy s = parse_strategy(get_or<std::string>(j, "kind", "T"));
  switch (s.kind) {
    case StrategyKind::truthful: break;
    case StrategyKind::subset: s.param = get_or(j, "frac", s.param); break;
    case StrategyKind::noise_output: s.param = get_or(j, "level", s.param); break;
    case StrategyKind::duplicate: s.param = get_or(j, "copies", s.param); break;
    case StrategyKind::inject:
      s.param = get_or(j, "frac", s.param);
      s.offset = get_or(j, "offset", s.offset);
      if (j.contains("fill")) s.fill = get_or(j, "fill", 0.0);
      break;
    case StrategyKind::noise_input: s.param = get_or(j, "sd", s.param); break;
  }
  s.validate();
  return s;
}

inline std::string strategy_label(const Json& j) {
  return j.is_string() ? j.get<std::string>() : j.dump();
}

inline SweepAxis parse_axis(const std::string& s) {
  for (SweepAxis a : {SweepAxis::none, SweepAxis::strategy, SweepAxis::validation_fraction,
                      SweepAxis::validation_noise, SweepAxis::friedman_alpha,
                      SweepAxis::friedman_beta, SweepAxis::sorted_fraction, SweepAxis::weights})
    if (s == to_string(a)) return a;
  throw ConfigError("unknown sweep axis '" + s + "'");
}

}  // namespace detail

/// Builds a configuration from a JSON document.
inline ExperimentConfig parse_config(const Json& doc) {
  detail::check_keys(doc, "configuration",
                     {"name", "seed", "repeats", "threads", "model", "sources", "validation",
                      "validation_subset", "standardize", "strategies", "dvf", "weights", "reward",
                      "perturb", "sweep", "permutations", "exact_limit", "description"});
  ExperimentConfig c;
  c.seed = detail::get_or<std::uint64_t>(doc, "seed", 0);
  c.repeats = detail::get_or(doc, "repeats", 1);
  if (c.repeats < 0) throw ConfigError("repeats must be non-negative");
  c.threads = detail::get_or(doc, "threads", default_threads());
  if (c.threads < 1) throw ConfigError("threads must be at least 1");
  if (!doc.contains("model")) throw ConfigError("config needs a 'model' section");
  c.model_json = doc.at("model");
  detail::require_object(c.model_json, "model");

  if (!doc.contains("sources") || !doc.at("sources").is_array() || doc.at("sources").empty())
    throw ConfigError("config needs a non-empty 'sources' array");
  int idx = 0;
  for (const auto& s : doc.at("sources")) {
    int copies = detail::get_or(s, "copies", 1);
    if (copies < 1) throw ConfigError("source copies must be at least 1");
    for (int k = 0; k < copies; ++k)
      c.sources.push_back(detail::parse_source(s, "source " + std::to_string(idx++)));
  }
  check_source_count(c.n());

  if (doc.contains("validation")) c.validation = detail::parse_source(doc.at("validation"), "validation");
  c.validation_subset = detail::get_or(doc, "validation_subset", 0.5);
  if (!(c.validation_subset > 0.0 && c.validation_subset <= 1.0))
    throw ConfigError("validation_subset must be in (0, 1]");
  c.standardize = detail::get_or(doc, "standardize", true);

  c.strategies.assign(static_cast<std::size_t>(c.n()), Strategy::truthful());
  c.strategy_labels.assign(static_cast<std::size_t>(c.n()), "T");
  if (doc.contains("strategies")) {
    const Json& st = doc.at("strategies");
    auto assign = [&](int i, const Json& v) {
      if (i < 0 || i >= c.n()) throw ConfigError("strategy refers to missing source " + std::to_string(i));
      c.strategies[static_cast<std::size_t>(i)] = detail::parse_strategy_json(v);
      c.strategy_labels[static_cast<std::size_t>(i)] = detail::strategy_label(v);
    };
    if (st.is_array()) {
      if (static_cast<int>(st.size()) > c.n()) throw ConfigError("more strategies than sources");
      for (std::size_t i = 0; i < st.size(); ++i) assign(static_cast<int>(i), st[i]);
    } else if (st.is_object()) {
      for (const auto& [key, v] : st.items()) {
        int i = -1;
        try {
          std::size_t used = 0;
          i = std::stoi(key, &used);
          if (used != key.size()) i = -1;
        } catch (const std::logic_error&) {
        }
        assign(i, v);
      }
    } else {
      throw ConfigError("'strategies' must be an array or an object keyed by source index");
    }
  }

  c.dvf = parse_dvf_kind(detail::get_or<std::string>(doc, "dvf", "log-score"));
  c.weights = detail::get_or<std::string>(doc, "weights", "shapley");
  if (c.weights == "custom") throw ConfigError("custom weights are library-only");
  parse_weights(c.weights, c.n());

  if (doc.contains("reward")) {
    const Json& r = doc.at("reward");
    detail::check_keys(r, "reward", {"kind", "a", "B", "gamma", "validation_frac", "mode"});
    std::string kind = detail::get_or<std::string>(r, "kind", "none");
    if (kind == "none") c.reward.kind = RewardKind::none;
    else if (kind == "budget") c.reward.kind = RewardKind::budget;
    else if (kind == "scaled") c.reward.kind = RewardKind::scaled;
    else if (kind == "cross-validation") c.reward.kind = RewardKind::cross_validation;
    else throw ConfigError("unknown reward kind '" + kind + "'");
    c.reward.a = detail::get_or(r, "a", 1.0);
    c.reward.budget = detail::get_or(r, "B", 1.0);
    c.reward.gamma = detail::get_or(r, "gamma", 0.0);
    c.reward.validation_frac = detail::get_or(r, "validation_frac", 0.25);
    std::string mode = detail::get_or<std::string>(r, "mode", "breve");
    if (mode != "breve" && mode != "grave") throw ConfigError("reward mode must be 'breve' or 'grave'");
    c.reward.grave = mode == "grave";
    if (c.reward.kind == RewardKind::budget && (!(c.reward.a > 0.0) || !(c.reward.budget > 0.0)))
      throw ConfigError("budget reward needs a > 0 and B > 0");
    if (c.reward.kind == RewardKind::scaled && !(c.reward.budget > 0.0))
      throw ConfigError("scaled reward needs B > 0");
    if (c.reward.kind == RewardKind::cross_validation) {
      if (!(c.reward.validation_frac > 0.0 && c.reward.validation_frac < 1.0))
        throw ConfigError("cross-validation validation_frac must be in (0, 1)");
      if (c.n() < 2) throw ConfigError("cross-validation rewards need at least two sources");
      if (c.dvf != DvfKind::log_score) throw ConfigError("cross-validation rewards use the log-score");
    }
  }

  if (doc.contains("perturb")) {
    const Json& p = doc.at("perturb");
    detail::check_keys(p, "perturb",
                       {"validation_noise_sd", "friedman_alpha", "friedman_beta", "sorted_fraction"});
    c.perturb.validation_noise_sd = detail::get_or(p, "validation_noise_sd", 0.0);
    c.perturb.friedman_alpha = detail::get_or(p, "friedman_alpha", 0.0);
    c.perturb.friedman_beta = detail::get_or(p, "friedman_beta", 0.0);
    c.perturb.sorted_fraction = detail::get_or(p, "sorted_fraction", 1.0);
    c.perturb.validate();
  }

  if (doc.contains("sweep")) {
    const Json& s = doc.at("sweep");
    detail::check_keys(s, "sweep", {"axis", "source", "values"});
    c.sweep.axis = detail::parse_axis(detail::get_or<std::string>(s, "axis", "none"));
    c.sweep.source = detail::get_or(s, "source", 0);
    if (c.sweep.axis != SweepAxis::none) {
      if (!s.contains("values") || !s.at("values").is_array() || s.at("values").empty())
        throw ConfigError("sweep needs a non-empty 'values' array");
      const Json& vals = s.at("values");
      if (c.sweep.axis == SweepAxis::strategy) {
        if (c.sweep.source < 0 || c.sweep.source >= c.n())
          throw ConfigError("sweep refers to missing source " + std::to_string(c.sweep.source));
        for (const auto& v : vals) {
          c.sweep.strategies.push_back(detail::parse_strategy_json(v));
          c.sweep.labels.push_back(detail::strategy_label(v));
        }
      } else if (c.sweep.axis == SweepAxis::weights) {
        for (const auto& v : vals) {
          if (!v.is_string()) throw ConfigError("weight sweep values must be strings");
          parse_weights(v.get<std::string>(), c.n());
          c.sweep.labels.push_back(v.get<std::string>());
        }
      } else {
        for (const auto& v : vals) {
          if (!v.is_number()) throw ConfigError("sweep values must be numbers");
          double x = v.get<double>();
          if (!std::isfinite(x)) throw ConfigError("sweep values must be finite");
          if (!c.sweep.numbers.empty() && !(x > c.sweep.numbers.back()))
            throw ConfigError("sweep values must be strictly increasing");
          c.sweep.numbers.push_back(x);
        }
      }
    }
  }
  if (c.reward.kind == RewardKind::cross_validation &&
      (c.sweep.axis == SweepAxis::validation_fraction || c.sweep.axis == SweepAxis::validation_noise ||
       c.sweep.axis == SweepAxis::friedman_alpha || c.sweep.axis == SweepAxis::friedman_beta ||
       c.sweep.axis == SweepAxis::sorted_fraction))
    throw ConfigError("cross-validation rewards have no mediator validation set to sweep");

  c.permutations = detail::get_or(doc, "permutations", 3000);
  if (c.permutations < 1) throw ConfigError("permutations must be at least 1");
  c.exact_limit = detail::get_or(doc, "exact_limit", 20);
  if (c.exact_limit < 1 || c.exact_limit > 20) throw ConfigError("exact_limit must be in [1, 20]");
  if (c.n() > c.exact_limit && c.reward.kind == RewardKind::cross_validation)
    throw ConfigError("cross-validation rewards need exact tables (at most " +
                      std::to_string(c.exact_limit) + " sources)");
  if (c.n() > c.exact_limit && c.weights != "shapley")
    throw ConfigError("more than " + std::to_string(c.exact_limit) +
                      " sources are valued with sampled Shapley only");
  if (uses_validation(c.dvf) && c.reward.kind != RewardKind::cross_validation && !c.validation)
    throw ConfigError("the log-score needs a 'validation' section");

  c.echo = doc;
  c.echo.erase("threads");
  return c;
}

struct SourceResult {
  int source = 0;
  std::string strategy;
  double value = 0.0;      // stand-alone value of the submitted dataset
  double semivalue = 0.0;
  double reward = 0.0;
  std::optional<double> std_error;  // sampled estimator only
};

struct RepeatResult {
  int repeat = 0;
  std::vector<SourceResult> sources;
};

struct SourceSummary {
  int source = 0;
  double mean_value = 0.0, mean_semivalue = 0.0, mean_reward = 0.0;
  std::optional<double> ci_value, ci_semivalue, ci_reward;  // 95% half-widths
};

struct PointResult {
  std::string label;
  std::optional<double> sweep_value;
  std::vector<std::string> strategies;
  std::string weights;
  std::vector<RepeatResult> repeats;
  std::vector<SourceSummary> summary;
  std::vector<std::uint64_t> flagged;  // degenerate coalition masks (volume)
};

struct RunReport {
  Json config;
  std::string config_hash;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
  SweepAxis axis = SweepAxis::none;
  std::string dvf;
  std::string post;
  std::string estimator;
  std::vector<PointResult> points;
};

namespace detail {

/// Runs a pipeline stage, prefixing any library error with the stage name.
template <class Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const UnsupportedError& e) {
    throw UnsupportedError(name + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(name + ": " + e.what());
  } catch (const ParseError& e) {
    throw ParseError(name + ": " + e.what());
  } catch (const InputError& e) {
    throw InputError(name + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(name + ": " + e.what());
  }
}

inline Dataset materialize(const SourceDef& d, std::uint64_t seed) {
  Dataset out;
  switch (d.kind) {
    case SourceDef::Kind::friedman:
      out = friedman_generate(d.points, seed, d.alpha, d.beta, d.noise_sd);
      break;
    case SourceDef::Kind::bernoulli: {
      Rng rng(seed);
      std::bernoulli_distribution coin(d.p);
      std::vector<double> y;
      for (Index r = 0; r < d.points; ++r) y.push_back(coin(rng) ? 1.0 : 0.0);
      out = Dataset::from_outputs(y, OutputKind::binary);
      break;
    }
    case SourceDef::Kind::csv:
      out = load_csv(d.path, {d.output_column, d.output_kind});
      break;
    case SourceDef::Kind::inline_data: {
      const Index n = static_cast<Index>(d.outputs.size());
      Index f = d.inputs.empty() ? 0 : static_cast<Index>(d.inputs.front().size());
      if (!d.inputs.empty() && static_cast<Index>(d.inputs.size()) != n)
        throw InputError("inline inputs and outputs have different lengths");
      MatrixXd x(n, f);
      for (Index r = 0; r < static_cast<Index>(d.inputs.size()); ++r) {
        if (static_cast<Index>(d.inputs[static_cast<std::size_t>(r)].size()) != f)
          throw InputError("inline inputs are ragged");
        for (Index c = 0; c < f; ++c) x(r, c) = d.inputs[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      }
      out = Dataset(std::move(x), Eigen::Map<const VectorXd>(d.outputs.data(), n), d.output_kind);
      break;
    }
  }
  if (d.noise_var) out = with_noise_var(std::move(out), *d.noise_var);
  return out;
}

inline BayesianModel build_model(const Json& j, Index features) {
  std::string family = get_or<std::string>(j, "family", "");
  BayesianModel m;
  if (family == "beta-bernoulli") {
    check_keys(j, "model", {"family", "alpha", "beta"});
    m = BetaBernoulli{get_or(j, "alpha", 1.0), get_or(j, "beta", 1.0)};
  } else if (family == "gaussian-known-var") {
    check_keys(j, "model", {"family", "prior_mean", "prior_var", "noise_var"});
    m = GaussianMean{get_or(j, "prior_mean", 0.0), get_or(j, "prior_var", 1.0), get_or(j, "noise_var", 1.0)};
  } else if (family == "bayes-linreg") {
    check_keys(j, "model", {"family", "prior_var", "noise_var", "intercept"});
    m = BayesLinReg::isotropic(features, get_or(j, "prior_var", 1.0), get_or(j, "noise_var", 1.0),
                               get_or(j, "intercept", false));
  } else if (family == "gp") {
    check_keys(j, "model", {"family", "lengthscales", "signal_var", "noise_var", "jitter"});
    GpHyper h = GpHyper::defaults(features);
    if (j.contains("lengthscales")) {
      const Json& l = j.at("lengthscales");
      if (l.is_number()) {
        h.lengthscales.setConstant(l.get<double>());
      } else {
        auto v = get_or<std::vector<double>>(j, "lengthscales", {});
        h.lengthscales = Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size()));
      }
    }
    h.signal_var = get_or(j, "signal_var", 1.0);
    h.noise_var = get_or(j, "noise_var", 1.0);
    h.jitter = get_or(j, "jitter", 0.0);
    m = h;
  } else {
    throw ConfigError("unknown model family '" + family + "'");
  }
  fairval::validate(m);
  return m;
}

inline double student_t975(int dof) {
  // Two-sided 95% quantile of Student's t.
  return boost::math::quantile(boost::math::students_t(dof), 0.975);
}

inline std::optional<double> ci_half_width(const std::vector<double>& x) {
  if (x.size() < 2) return std::nullopt;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  double sd = std::sqrt(ss / static_cast<double>(x.size() - 1));
  return student_t975(static_cast<int>(x.size()) - 1) * sd / std::sqrt(static_cast<double>(x.size()));
}

inline std::vector<SourceSummary> summarize(const std::vector<RepeatResult>& repeats, int n) {
  std::vector<SourceSummary> out;
  for (int i = 0; i < n; ++i) {
    std::vector<double> v, s, r;
    for (const auto& rep : repeats) {
      const auto& sr = rep.sources[static_cast<std::size_t>(i)];
      v.push_back(sr.value);
      s.push_back(sr.semivalue);
      r.push_back(sr.reward);
    }
    SourceSummary sum;
    sum.source = i;
    auto mean = [](const std::vector<double>& x) {
      double t = 0.0;
      for (double e : x) t += e;
      return x.empty() ? 0.0 : t / static_cast<double>(x.size());
    };
    sum.mean_value = mean(v);
    sum.mean_semivalue = mean(s);
    sum.mean_reward = mean(r);
    sum.ci_value = ci_half_width(v);
    sum.ci_semivalue = ci_half_width(s);
    sum.ci_reward = ci_half_width(r);
    out.push_back(sum);
  }
  return out;
}

inline std::string hex64(std::uint64_t x) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, x >>= 4) s[static_cast<std::size_t>(i)] = digits[x & 0xF];
  return s;
}

inline std::vector<double> post_process(const std::vector<double>& phi, const RewardDef& r) {
  switch (r.kind) {
    case RewardKind::budget: return budget_cap(phi, r.a, r.budget);
    case RewardKind::scaled: return scaled_reward(phi, r.budget, r.gamma);
    default: return phi;
  }
}

}  // namespace detail

/// Full pipeline: generate or load data, standardize, apply strategies,
/// build games per repeat, compute semivalues and rewards.
inline RunReport run_experiment(const ExperimentConfig& cfg) {
  const auto started = std::chrono::steady_clock::now();
  const int n = cfg.n();
  const std::uint64_t seed = cfg.seed;
  RunReport report;
  report.config = cfg.echo;
  report.config["seed"] = seed;
  report.config_hash = detail::hex64(fnv1a(report.config.dump()));
  report.seed = seed;
  report.axis = cfg.sweep.axis;
  report.dvf = to_string(cfg.dvf);

  // Raw data, standardized with statistics of the union of true sources.
  std::vector<Dataset> truth = detail::stage("load sources", [&] {
    std::vector<Dataset> out;
    for (int j = 0; j < n; ++j)
      out.push_back(detail::materialize(cfg.sources[static_cast<std::size_t>(j)],
                                        derive_seed(seed, "source", static_cast<std::uint64_t>(j))));
    for (int j = 1; j < n; ++j)
      if (out[static_cast<std::size_t>(j)].features() != out[0].features() &&
          !(out[static_cast<std::size_t>(j)].empty() || out[0].empty()))
        throw InputError("source " + std::to_string(j) + " has a different feature count");
    return out;
  });
  std::optional<Dataset> pool;
  if (cfg.validation)
    pool = detail::stage("load validation", [&] { return detail::materialize(*cfg.validation, derive_seed(seed, "validation")); });
  Standardizer standardizer;
  const bool regression = truth.front().kind == OutputKind::regression;
  if (cfg.standardize && regression) {
    standardizer = Standardizer::fit(concat(truth));
    for (auto& d : truth) d = standardizer.apply(std::move(d));
    if (pool) *pool = standardizer.apply(std::move(*pool));
  }
  const Index features = truth.front().features();
  const BayesianModel model = detail::stage("model", [&] { return detail::build_model(cfg.model_json, features); });

  const bool sampled = n > cfg.exact_limit;
  const bool cross = cfg.reward.kind == RewardKind::cross_validation;
  report.estimator = sampled ? "sampled(" + std::to_string(cfg.permutations) + ")" : "exact";
  report.post = cross ? (cfg.reward.grave ? "cross-validation-grave" : "cross-validation-breve")
                      : cfg.reward.kind == RewardKind::budget ? "budget-capped"
                      : cfg.reward.kind == RewardKind::scaled ? "scaled" : "raw";

  // Validation subsets per repeat, shared by all sweep points.
  auto subset_rows = [&](int r, double frac, Index m) {
    if (frac >= 1.0) {
      std::vector<Index> all(static_cast<std::size_t>(m));
      std::iota(all.begin(), all.end(), Index{0});
      return all;
    }
    Rng rng(derive_seed(seed, "validation-subset", static_cast<std::uint64_t>(r)));
    return detail::sample_rows(m, std::max<Index>(1, ceil_count(frac, m)), rng);
  };

  for (std::size_t p = 0; p < cfg.sweep.size(); ++p) {
    PointResult point;
    std::vector<Strategy> strategies = cfg.strategies;
    point.strategies = cfg.strategy_labels;
    std::string weight_spec = cfg.weights;
    PerturbSpec perturb = cfg.perturb;
    double subset_frac = cfg.validation_subset;
    switch (cfg.sweep.axis) {
      case SweepAxis::none: point.label = "base"; break;
      case SweepAxis::strategy:
        strategies[static_cast<std::size_t>(cfg.sweep.source)] = cfg.sweep.strategies[p];
        point.strategies[static_cast<std::size_t>(cfg.sweep.source)] = cfg.sweep.labels[p];
        point.label = cfg.sweep.labels[p];
        break;
      case SweepAxis::weights:
        weight_spec = cfg.sweep.labels[p];
        point.label = weight_spec;
        break;
      default: {
        double x = cfg.sweep.numbers[p];
        point.sweep_value = x;
        if (cfg.sweep.axis == SweepAxis::validation_fraction) subset_frac = x;
        if (cfg.sweep.axis == SweepAxis::validation_noise) perturb.validation_noise_sd = x;
        if (cfg.sweep.axis == SweepAxis::friedman_alpha) perturb.friedman_alpha = x;
        if (cfg.sweep.axis == SweepAxis::friedman_beta) perturb.friedman_beta = x;
        if (cfg.sweep.axis == SweepAxis::sorted_fraction) perturb.sorted_fraction = x;
        point.label = std::string(to_string(cfg.sweep.axis)) + "=" + Json(x).dump();
      }
    }
    if (!(subset_frac > 0.0 && subset_frac <= 1.0)) throw ConfigError("validation fraction must be in (0, 1]");
    const std::string stage_name = "point '" + point.label + "'";
    const SemivalueWeights weights = detail::stage(stage_name, [&] { return parse_weights(weight_spec, n); });
    point.weights = weights.label();

    std::vector<Dataset> submitted = detail::stage(stage_name + " strategies", [&] {
      std::vector<Dataset> out;
      for (int j = 0; j < n; ++j)
        out.push_back(apply_strategy(truth[static_cast<std::size_t>(j)], strategies[static_cast<std::size_t>(j)],
                                     derive_seed(seed, "strategy", static_cast<std::uint64_t>(j))));
      return out;
    });

    point.repeats.resize(static_cast<std::size_t>(cfg.repeats));
    auto fill = [&](int r, const std::vector<double>& value, const std::vector<double>& phi,
                    const std::vector<double>& reward, const std::vector<double>* se) {
      RepeatResult& rep = point.repeats[static_cast<std::size_t>(r)];
      rep.repeat = r;
      rep.sources.clear();
      for (int i = 0; i < n; ++i) {
        SourceResult s;
        s.source = i;
        s.strategy = point.strategies[static_cast<std::size_t>(i)];
        s.value = value[static_cast<std::size_t>(i)];
        s.semivalue = phi[static_cast<std::size_t>(i)];
        s.reward = reward[static_cast<std::size_t>(i)];
        if (se) s.std_error = (*se)[static_cast<std::size_t>(i)];
        rep.sources.push_back(std::move(s));
      }
    };

    detail::stage(stage_name + " valuation", [&] {
      if (cross) {
        parallel_for(static_cast<std::size_t>(cfg.repeats), cfg.threads, [&](std::size_t r) {
          auto seeds = cross_split_seeds(derive_seed(seed, "repeat", r), n);
          auto rewards = cross_validation_rewards(submitted, cfg.reward.validation_frac, weights, model, seeds, 1);
          std::vector<double> value(static_cast<std::size_t>(n), 0.0);
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
              if (j != i) value[static_cast<std::size_t>(i)] += rewards.games[static_cast<std::size_t>(j)][Coalition::single(i)];
          const auto& phi = cfg.reward.grave ? rewards.grave : rewards.breve;
          fill(static_cast<int>(r), value, phi, phi, nullptr);
        });
        return 0;
      }
      if (!uses_validation(cfg.dvf)) {
        DvfSpec spec{cfg.dvf, model, std::nullopt};
        std::vector<double> value(static_cast<std::size_t>(n));
        std::vector<double> phi, se;
        if (sampled) {
          auto eval = make_evaluator(submitted, spec);
          for (int i = 0; i < n; ++i) value[static_cast<std::size_t>(i)] = eval(Coalition::single(i));
          auto est = sampled_shapley(eval, n, cfg.permutations, derive_seed(seed, "shapley"), cfg.threads);
          phi = est.values;
          se = est.std_errors;
        } else {
          auto table = build_char_table(submitted, spec, {cfg.exact_limit, cfg.threads});
          point.flagged = table.flagged;
          for (int i = 0; i < n; ++i) value[static_cast<std::size_t>(i)] = table[Coalition::single(i)];
          phi = exact_semivalue(table, weights);
        }
        auto reward = detail::post_process(phi, cfg.reward);
        for (int r = 0; r < cfg.repeats; ++r) fill(r, value, phi, reward, sampled ? &se : nullptr);
        return 0;
      }
      Dataset val = perturb.identity() ? *pool
                                       : perturb_validation(*pool, perturb, derive_seed(seed, "perturb"),
                                                            standardizer.scale);
      if (sampled) {
        for (int r = 0; r < cfg.repeats; ++r) {
          auto rows = subset_rows(r, subset_frac, val.size());
          DvfSpec spec{cfg.dvf, model, take_rows(val, rows)};
          auto eval = make_evaluator(submitted, spec);
          std::vector<double> value(static_cast<std::size_t>(n));
          for (int i = 0; i < n; ++i) value[static_cast<std::size_t>(i)] = eval(Coalition::single(i));
          auto est = sampled_shapley(eval, n, cfg.permutations,
                                     derive_seed(seed, "shapley", static_cast<std::uint64_t>(r)), cfg.threads);
          fill(r, value, est.values, detail::post_process(est.values, cfg.reward), &est.std_errors);
        }
        return 0;
      }
      PooledGame game(submitted, model, val, cfg.dvf, cfg.threads);
      parallel_for(static_cast<std::size_t>(cfg.repeats), cfg.threads, [&](std::size_t r) {
        auto rows = subset_rows(static_cast<int>(r), subset_frac, val.size());
        auto table = game.table(rows);
        std::vector<double> value(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) value[static_cast<std::size_t>(i)] = table[Coalition::single(i)];
        auto phi = exact_semivalue(table, weights);
        fill(static_cast<int>(r), value, phi, detail::post_process(phi, cfg.reward), nullptr);
      });
      return 0;
    });
    point.summary = detail::summarize(point.repeats, n);
    report.points.push_back(std::move(point));
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

}  // namespace fairval
