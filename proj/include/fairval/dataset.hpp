#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "fairval/error.hpp"

namespace fairval {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class OutputKind { regression, binary };

inline const char* to_string(OutputKind k) {
  return k == OutputKind::binary ? "binary" : "regression";
}

/// Rows are points. `noise_var` is an optional per-row override of the
/// likelihood noise variance for Gaussian families (empty: model default;
/// a NaN entry also means model default for that row).
struct Dataset {
  MatrixXd inputs;
  VectorXd outputs;
  OutputKind kind = OutputKind::regression;
  VectorXd noise_var;

  Dataset() = default;
  Dataset(MatrixXd x, VectorXd y, OutputKind k = OutputKind::regression)
      : inputs(std::move(x)), outputs(std::move(y)), kind(k) {
    validate();
  }

  /// Empty dataset with a fixed feature count.
  static Dataset empty_like(Index features, OutputKind k = OutputKind::regression) {
    Dataset d;
    d.inputs.resize(0, features);
    d.outputs.resize(0);
    d.kind = k;
    return d;
  }

  /// Outputs only (no input features), e.g. Bernoulli or Gaussian-mean data.
  static Dataset from_outputs(const std::vector<double>& y,
                              OutputKind k = OutputKind::regression) {
    VectorXd out = Eigen::Map<const VectorXd>(y.data(), static_cast<Index>(y.size()));
    MatrixXd x(out.size(), 0);
    return Dataset(std::move(x), std::move(out), k);
  }

  Index size() const { return outputs.size(); }
  Index features() const { return inputs.cols(); }
  bool empty() const { return outputs.size() == 0; }
  bool has_noise_override() const { return noise_var.size() != 0; }

  void validate() const {
    if (inputs.rows() != outputs.size()) {
      throw InputError("dataset has " + std::to_string(inputs.rows()) +
                       " input rows but " + std::to_string(outputs.size()) + " outputs");
    }
    if (has_noise_override()) {
      if (noise_var.size() != outputs.size())
        throw InputError("per-row noise variance length does not match row count");
      for (Index r = 0; r < noise_var.size(); ++r) {
        if (!(noise_var[r] > 0.0) && !std::isnan(noise_var[r]))
          throw InputError("per-row noise variance must be positive");
      }
    }
    if (kind == OutputKind::binary) {
      for (Index r = 0; r < outputs.size(); ++r) {
        if (outputs[r] != 0.0 && outputs[r] != 1.0)
          throw InputError("binary dataset has output " + std::to_string(outputs[r]) +
                           " at row " + std::to_string(r));
      }
    }
  }

  bool operator==(const Dataset& o) const {
    return kind == o.kind && inputs.rows() == o.inputs.rows() &&
           inputs.cols() == o.inputs.cols() && inputs == o.inputs &&
           outputs == o.outputs && noise_var.size() == o.noise_var.size() &&
           ((noise_var.array().isNaN() && o.noise_var.array().isNaN()) ||
            noise_var.array() == o.noise_var.array())
               .all();
  }
};

/// Assigns a per-row noise variance to every row.
inline Dataset with_noise_var(Dataset d, double var) {
  d.noise_var = VectorXd::Constant(d.size(), var);
  d.validate();
  return d;
}

/// Multiset union: rows of each part, in order. Zero-row parts with no
/// columns are compatible with any feature count.
inline Dataset concat(std::span<const Dataset* const> parts) {
  Index rows = 0;
  Index cols = -1;
  OutputKind kind = OutputKind::regression;
  bool any_override = false;
  bool kind_set = false;
  for (const Dataset* p : parts) {
    rows += p->size();
    any_override = any_override || p->has_noise_override();
    if (p->empty() && p->features() == 0) continue;
    if (cols < 0) {
      cols = p->features();
    } else if (cols != p->features()) {
      throw InputError("cannot concatenate datasets with " + std::to_string(cols) +
                       " and " + std::to_string(p->features()) + " features");
    }
    if (!kind_set) {
      kind = p->kind;
      kind_set = true;
    } else if (kind != p->kind) {
      throw InputError("cannot concatenate binary and regression datasets");
    }
  }
  if (!kind_set && !parts.empty()) kind = parts.front()->kind;
  Dataset out;
  out.kind = kind;
  out.inputs.resize(rows, std::max<Index>(cols, 0));
  out.outputs.resize(rows);
  if (any_override)
    out.noise_var = VectorXd::Constant(rows, std::numeric_limits<double>::quiet_NaN());
  Index at = 0;
  for (const Dataset* p : parts) {
    if (p->empty()) continue;
    out.inputs.middleRows(at, p->size()) = p->inputs;
    out.outputs.segment(at, p->size()) = p->outputs;
    if (p->has_noise_override()) out.noise_var.segment(at, p->size()) = p->noise_var;
    at += p->size();
  }
  return out;
}

inline Dataset concat(const std::vector<Dataset>& parts) {
  std::vector<const Dataset*> ptrs;
  ptrs.reserve(parts.size());
  for (const auto& p : parts) ptrs.push_back(&p);
  return concat(std::span<const Dataset* const>(ptrs));
}

inline Dataset concat(const Dataset& a, const Dataset& b) {
  const Dataset* ptrs[] = {&a, &b};
  return concat(std::span<const Dataset* const>(ptrs));
}

inline Dataset take_rows(const Dataset& d, std::span<const Index> rows) {
  Dataset out;
  out.kind = d.kind;
  out.inputs.resize(static_cast<Index>(rows.size()), d.features());
  out.outputs.resize(static_cast<Index>(rows.size()));
  if (d.has_noise_override()) out.noise_var.resize(static_cast<Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    Index r = rows[k];
    if (r < 0 || r >= d.size()) throw InputError("row index out of range");
    out.inputs.row(static_cast<Index>(k)) = d.inputs.row(r);
    out.outputs[static_cast<Index>(k)] = d.outputs[r];
    if (d.has_noise_override()) out.noise_var[static_cast<Index>(k)] = d.noise_var[r];
  }
  return out;
}

/// Number of rows selected by a fraction, rounded up: ceil(frac * n).
inline Index ceil_count(double frac, Index n) {
  double x = frac * static_cast<double>(n);
  auto k = static_cast<Index>(std::ceil(x - 1e-9 * std::max(1.0, x)));
  return std::clamp<Index>(k, 0, n);
}

}  // namespace fairval
