#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fairval/dataset.hpp"
#include "fairval/error.hpp"
#include "fairval/rng.hpp"

namespace fairval {

inline constexpr Index friedman_features = 6;

/// Noiseless Friedman response; alpha warps the sine frequency, beta shifts.
inline double friedman_mean(const Eigen::Ref<const Eigen::RowVectorXd>& x, double alpha = 0.0,
                            double beta = 0.0) {
  return 10.0 * std::sin((1.0 + alpha) * std::numbers::pi * x[0] * x[1]) +
         20.0 * (x[2] - 0.5) * (x[2] - 0.5) + 10.0 * x[3] + 5.0 * x[4] + 0.0 * x[5] + beta;
}

inline Dataset friedman_generate(Index n, std::uint64_t seed, double alpha = 0.0, double beta = 0.0,
                                 double noise_sd = 1.0) {
  if (n < 0) throw ConfigError("point count must be non-negative");
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  MatrixXd x(n, friedman_features);
  VectorXd y(n);
  for (Index r = 0; r < n; ++r) {
    for (Index c = 0; c < friedman_features; ++c) x(r, c) = unif(rng);
    y[r] = friedman_mean(x.row(r), alpha, beta) + noise_sd * noise(rng);
  }
  return Dataset(std::move(x), std::move(y));
}

namespace detail {

/// Uniform random permutation of 0..n-1.
inline std::vector<Index> shuffled_indices(Index n, Rng& rng) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  for (Index i = n - 1; i > 0; --i) {
    std::uniform_int_distribution<Index> pick(0, i);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  return idx;
}

/// k distinct row indices, returned in ascending order.
inline std::vector<Index> sample_rows(Index n, Index k, Rng& rng) {
  auto idx = shuffled_indices(n, rng);
  idx.resize(static_cast<std::size_t>(k));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace detail

enum class StrategyKind { truthful, subset, noise_output, duplicate, inject, noise_input };

/// A submission strategy: T, S, N, D, I or P.
struct Strategy {
  StrategyKind kind = StrategyKind::truthful;
  double param = 0.0;  // frac, noise level, copies or input sd depending on kind
  double offset = 0.1;              // inject: distance below each column minimum
  std::optional<double> fill;       // inject: output of injected rows

  static Strategy truthful() { return {}; }
  static Strategy subset(double frac = 0.5) { return {StrategyKind::subset, frac}; }
  static Strategy noise_output(double level = 0.2) { return {StrategyKind::noise_output, level}; }
  static Strategy duplicate(int copies = 3) { return {StrategyKind::duplicate, double(copies)}; }
  static Strategy inject(double frac = 0.1, double offset = 0.1,
                         std::optional<double> fill = std::nullopt) {
    return {StrategyKind::inject, frac, offset, fill};
  }
  static Strategy noise_input(double sd = 0.05) { return {StrategyKind::noise_input, sd}; }

  char code() const { return "TSNDIP"[static_cast<int>(kind)]; }

  void validate() const {
    switch (kind) {
      case StrategyKind::truthful: break;
      case StrategyKind::subset:
        if (!(param > 0.0 && param <= 1.0)) throw ConfigError("subset fraction must be in (0, 1]");
        break;
      case StrategyKind::noise_output:
        if (!(param >= 0.0)) throw ConfigError("output noise level must be non-negative");
        break;
      case StrategyKind::duplicate:
        if (!(param >= 1.0) || param != std::floor(param))
          throw ConfigError("duplicate copies must be an integer >= 1");
        break;
      case StrategyKind::inject:
        if (!(param > 0.0 && param <= 1.0)) throw ConfigError("inject fraction must be in (0, 1]");
        if (!std::isfinite(offset)) throw ConfigError("inject offset must be finite");
        break;
      case StrategyKind::noise_input:
        if (!(param >= 0.0)) throw ConfigError("input noise sd must be non-negative");
        break;
    }
  }
};

/// "T", "S", "N", "D", "I" or "P" with default parameters.
inline Strategy parse_strategy(std::string_view code) {
  if (code == "T") return Strategy::truthful();
  if (code == "S") return Strategy::subset();
  if (code == "N") return Strategy::noise_output();
  if (code == "D") return Strategy::duplicate();
  if (code == "I") return Strategy::inject();
  if (code == "P") return Strategy::noise_input();
  throw ConfigError("unknown strategy '" + std::string(code) + "'");
}

inline Dataset apply_strategy(const Dataset& data, const Strategy& s, std::uint64_t seed) {
  s.validate();
  Rng rng(seed);
  switch (s.kind) {
    case StrategyKind::truthful:
      return data;
    case StrategyKind::subset: {
      if (data.empty()) return data;
      auto rows = detail::sample_rows(data.size(), ceil_count(s.param, data.size()), rng);
      return take_rows(data, rows);
    }
    case StrategyKind::noise_output: {
      Dataset out = data;
      if (data.kind == OutputKind::binary) {
        if (s.param > 1.0) throw ConfigError("label flip probability must be at most 1");
        std::bernoulli_distribution flip(s.param);
        for (Index r = 0; r < out.size(); ++r)
          if (flip(rng)) out.outputs[r] = 1.0 - out.outputs[r];
      } else {
        std::normal_distribution<double> noise(0.0, 1.0);
        for (Index r = 0; r < out.size(); ++r) out.outputs[r] += s.param * noise(rng);
      }
      return out;
    }
    case StrategyKind::duplicate:
      return concat(std::vector<Dataset>(static_cast<std::size_t>(s.param), data));
    case StrategyKind::inject: {
      if (data.empty()) throw InputError("cannot inject synthetic rows into an empty dataset");
      if (data.features() == 0) throw InputError("inject needs input features to shift");
      auto rows = detail::sample_rows(data.size(), ceil_count(s.param, data.size()), rng);
      Dataset extra = take_rows(data, rows);
      const Index shifted = std::min<Index>(2, data.features());
      for (Index c = 0; c < shifted; ++c)
        extra.inputs.col(c).setConstant(data.inputs.col(c).minCoeff() - s.offset);
      double fill = 0.0;
      if (s.fill) {
        fill = *s.fill;
      } else if (data.kind == OutputKind::binary) {
        fill = data.outputs.sum() * 2.0 >= static_cast<double>(data.size()) ? 1.0 : 0.0;
      }
      extra.outputs.setConstant(fill);
      Dataset out = concat(data, extra);
      out.validate();
      return out;
    }
    case StrategyKind::noise_input: {
      Dataset out = data;
      std::normal_distribution<double> noise(0.0, 1.0);
      for (Index r = 0; r < out.size(); ++r)
        for (Index c = 0; c < out.features(); ++c) out.inputs(r, c) += s.param * noise(rng);
      return out;
    }
  }
  return data;
}

/// Validation-set perturbations. Defaults leave the set unchanged.
struct PerturbSpec {
  double validation_noise_sd = 0.0;
  double friedman_alpha = 0.0;
  double friedman_beta = 0.0;
  double sorted_fraction = 1.0;  // 0 is treated like 1 (no input shift)

  bool identity() const {
    return validation_noise_sd == 0.0 && friedman_alpha == 0.0 && friedman_beta == 0.0 &&
           (sorted_fraction == 1.0 || sorted_fraction == 0.0);
  }

  void validate() const {
    if (!(validation_noise_sd >= 0.0)) throw ConfigError("validation noise sd must be non-negative");
    if (!std::isfinite(friedman_alpha) || !std::isfinite(friedman_beta))
      throw ConfigError("Friedman perturbation parameters must be finite");
    if (!(sorted_fraction >= 0.0 && sorted_fraction <= 1.0))
      throw ConfigError("sorted fraction must be in (0, 1]");
  }
};

/// Applies, in order: the Friedman alpha/beta modification (outputs keep
/// their original noise draw; `output_scale` converts the shift into the
/// units of already standardized outputs), additive output noise, and the
/// sorted-fraction input shift.
inline Dataset perturb_validation(const Dataset& validation, const PerturbSpec& spec,
                                  std::uint64_t seed, double output_scale = 1.0) {
  spec.validate();
  Dataset out = validation;
  if (spec.friedman_alpha != 0.0 || spec.friedman_beta != 0.0) {
    if (out.features() != friedman_features)
      throw ConfigError("Friedman perturbation needs 6-feature inputs");
    for (Index r = 0; r < out.size(); ++r)
      out.outputs[r] += (friedman_mean(out.inputs.row(r), spec.friedman_alpha, spec.friedman_beta) -
                         friedman_mean(out.inputs.row(r))) /
                        output_scale;
  }
  if (spec.validation_noise_sd > 0.0) {
    Rng rng(derive_seed(seed, "validation-noise"));
    std::normal_distribution<double> noise(0.0, 1.0);
    for (Index r = 0; r < out.size(); ++r) out.outputs[r] += spec.validation_noise_sd * noise(rng);
  }
  if (spec.sorted_fraction > 0.0 && spec.sorted_fraction < 1.0 && !out.empty()) {
    Rng rng(derive_seed(seed, "validation-sort"));
    auto cols = detail::shuffled_indices(out.features(), rng);
    std::vector<Index> rows(static_cast<std::size_t>(out.size()));
    std::iota(rows.begin(), rows.end(), Index{0});
    std::stable_sort(rows.begin(), rows.end(), [&](Index a, Index b) {
      for (Index c : cols) {
        if (out.inputs(a, c) != out.inputs(b, c)) return out.inputs(a, c) < out.inputs(b, c);
      }
      return false;
    });
    rows.resize(static_cast<std::size_t>(ceil_count(spec.sorted_fraction, out.size())));
    out = take_rows(out, rows);
  }
  return out;
}

struct Split {
  Dataset train;
  Dataset validation;
};

/// Random disjoint split; the validation part gets ceil(frac * n) rows.
inline Split split_train_validation(const Dataset& data, double validation_frac, std::uint64_t seed) {
  if (!(validation_frac > 0.0 && validation_frac < 1.0))
    throw ConfigError("validation fraction must be in (0, 1)");
  Rng rng(seed);
  auto idx = detail::shuffled_indices(data.size(), rng);
  const auto k = static_cast<std::size_t>(ceil_count(validation_frac, data.size()));
  std::vector<Index> val(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
  std::vector<Index> train(idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end());
  std::sort(val.begin(), val.end());
  std::sort(train.begin(), train.end());
  return {take_rows(data, train), take_rows(data, val)};
}

/// Output standardization fitted on one dataset, applied to others.
struct Standardizer {
  double mean = 0.0;
  double scale = 1.0;

  static Standardizer fit(const Dataset& d) {
    Standardizer s;
    if (d.empty()) return s;
    s.mean = d.outputs.mean();
    double var = (d.outputs.array() - s.mean).square().mean();
    s.scale = var > 0.0 ? std::sqrt(var) : 1.0;
    return s;
  }

  Dataset apply(Dataset d) const {
    d.outputs = (d.outputs.array() - mean) / scale;
    return d;
  }
};

struct CsvSchema {
  std::string output_column;
  OutputKind kind = OutputKind::regression;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

}  // namespace detail

/// Reads a header row and numeric data rows. Row numbers in errors count
/// data rows from 1 (the header is not counted).
inline Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open CSV file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": missing header row");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  std::vector<std::string> header = detail::split_csv_line(line);
  for (auto& h : header) h = detail::trim(h);
  auto out_it = std::find(header.begin(), header.end(), schema.output_column);
  if (out_it == header.end())
    throw InputError(path + ": output column '" + schema.output_column + "' not in header");
  const auto out_col = static_cast<std::size_t>(out_it - header.begin());
  std::vector<std::vector<double>> rows;
  Index row_no = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    ++row_no;
    auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw ParseError(path + ": row " + std::to_string(row_no) + " has " +
                       std::to_string(cells.size()) + " cells, header has " +
                       std::to_string(header.size()));
    std::vector<double> values;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      std::string cell = detail::trim(cells[c]);
      std::size_t used = 0;
      double v = 0.0;
      bool ok = !cell.empty();
      if (ok) {
        try {
          v = std::stod(cell, &used);
        } catch (const std::logic_error&) {
          ok = false;
        }
      }
      if (!ok || used != cell.size())
        throw ParseError(path + ": row " + std::to_string(row_no) + ", column '" + header[c] +
                         "': '" + cell + "' is not a number");
      values.push_back(v);
    }
    rows.push_back(std::move(values));
  }
  const Index n = static_cast<Index>(rows.size());
  const Index d = static_cast<Index>(header.size()) - 1;
  Dataset data;
  data.kind = schema.kind;
  data.inputs.resize(n, d);
  data.outputs.resize(n);
  for (Index r = 0; r < n; ++r) {
    Index c_in = 0;
    for (std::size_t c = 0; c < header.size(); ++c) {
      double v = rows[static_cast<std::size_t>(r)][c];
      if (c == out_col) {
        if (schema.kind == OutputKind::binary && v != 0.0 && v != 1.0)
          throw InputError(path + ": row " + std::to_string(r + 1) + " has binary output " +
                           std::to_string(v));
        data.outputs[r] = v;
      } else {
        data.inputs(r, c_in++) = v;
      }
    }
  }
  data.validate();
  return data;
}

}  // namespace fairval
