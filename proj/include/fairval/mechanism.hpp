#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fairval/datagen.hpp"
#include "fairval/dataset.hpp"
#include "fairval/error.hpp"
#include "fairval/model.hpp"
#include "fairval/rng.hpp"
#include "fairval/semivalue.hpp"
#include "fairval/valuation.hpp"

namespace fairval {

/// Rewards when each source's split-off data scores the others' games.
/// per_game(i, j) is source i's semivalue in the game validated on T_j.
struct CrossGameRewards {
  MatrixXd per_game;
  std::vector<double> breve;  // own game excluded
  std::vector<double> grave;  // own game included (manipulable)
  std::vector<CharacteristicTable> games;
};

inline CrossGameRewards assemble_cross_rewards(std::vector<CharacteristicTable> games,
                                               const SemivalueWeights& weights) {
  const int n = static_cast<int>(games.size());
  CrossGameRewards out;
  out.per_game = MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    auto phi = exact_semivalue(games[static_cast<std::size_t>(j)], weights);
    for (int i = 0; i < n; ++i) out.per_game(i, j) = phi[static_cast<std::size_t>(i)];
  }
  for (int i = 0; i < n; ++i) {
    double b = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != i) b += out.per_game(i, j);
    out.breve.push_back(b);
    out.grave.push_back(b + out.per_game(i, i));
  }
  out.games = std::move(games);
  return out;
}

/// Per-source split seeds derived from (seed, source index).
inline std::vector<std::uint64_t> cross_split_seeds(std::uint64_t seed, int n) {
  std::vector<std::uint64_t> s;
  for (int j = 0; j < n; ++j) s.push_back(derive_seed(seed, "cross-split", static_cast<std::uint64_t>(j)));
  return s;
}

/// Splits every source into (remaining D_j, validation T_j).
inline std::vector<Split> split_sources(const std::vector<Dataset>& sources, double validation_frac,
                                        std::span<const std::uint64_t> seeds) {
  if (seeds.size() != sources.size()) throw ConfigError("one split seed per source is required");
  std::vector<Split> out;
  for (std::size_t j = 0; j < sources.size(); ++j) {
    const Index n = sources[j].size();
    const Index k = n > 0 ? ceil_count(validation_frac, n) : 0;
    if (n < 2 || k < 1 || k >= n)
      throw ConfigError("source " + std::to_string(j) + " has " + std::to_string(n) +
                        " rows, too few to split into validation and remaining data");
    out.push_back(split_train_validation(sources[j], validation_frac, seeds[j]));
  }
  return out;
}

/// Games from already split sources: game j scores coalitions of the
/// remaining datasets on T_j. Each coalition's posterior is shared by all n
/// games.
inline std::vector<CharacteristicTable> cross_games(const std::vector<Split>& splits,
                                                    const BayesianModel& model, int threads = 1) {
  std::vector<Dataset> train;
  std::vector<Dataset> vals;
  for (const auto& s : splits) {
    train.push_back(s.train);
    vals.push_back(s.validation);
  }
  PooledGame pooled(train, model, concat(vals), DvfKind::log_score, threads);
  std::vector<CharacteristicTable> games;
  Index at = 0;
  for (const auto& v : vals) {
    std::vector<Index> rows(static_cast<std::size_t>(v.size()));
    std::iota(rows.begin(), rows.end(), at);
    at += v.size();
    games.push_back(pooled.table(rows));
  }
  return games;
}

inline CrossGameRewards cross_validation_rewards(const std::vector<Dataset>& sources,
                                                 double validation_frac,
                                                 const SemivalueWeights& weights,
                                                 const BayesianModel& model,
                                                 std::span<const std::uint64_t> split_seeds,
                                                 int threads = 1) {
  const int n = static_cast<int>(sources.size());
  if (n < 2) throw ConfigError("cross-validation rewards need at least two sources");
  if (weights.n != n) throw ConfigError("weights do not match the number of sources");
  auto splits = split_sources(sources, validation_frac, split_seeds);
  return assemble_cross_rewards(cross_games(splits, model, threads), weights);
}

inline CrossGameRewards cross_validation_rewards(const std::vector<Dataset>& sources,
                                                 double validation_frac,
                                                 const SemivalueWeights& weights,
                                                 const BayesianModel& model, std::uint64_t seed,
                                                 int threads = 1) {
  auto seeds = cross_split_seeds(seed, static_cast<int>(sources.size()));
  return cross_validation_rewards(sources, validation_frac, weights, model, seeds, threads);
}

}  // namespace fairval
