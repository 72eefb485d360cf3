#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fairval/semivalue.hpp"
#include "test_util.hpp"

using namespace fairval;

namespace {

// Three-player game: v(0)=v(1)=3, v(2)=1, v(01)=5, v(02)=v(12)=4, v(N)=6.
CharacteristicTable table4() { return CharacteristicTable(3, {0, 3, 3, 5, 1, 4, 4, 6}); }

// Shapley by averaging marginal contributions over all orderings.
std::vector<double> shapley_by_permutations(const CharacteristicTable& t) {
  std::vector<int> order(static_cast<std::size_t>(t.n));
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> phi(order.size(), 0.0);
  int count = 0;
  do {
    std::uint64_t mask = 0;
    for (int i : order) {
      phi[static_cast<std::size_t>(i)] += t.values[mask | (std::uint64_t{1} << i)] - t.values[mask];
      mask |= std::uint64_t{1} << i;
    }
    ++count;
  } while (std::next_permutation(order.begin(), order.end()));
  for (auto& x : phi) x /= count;
  return phi;
}

std::vector<SemivalueWeights> all_families(int n) {
  return {make_weights(WeightFamily::shapley, n), make_weights(WeightFamily::banzhaf, n),
          make_weights(WeightFamily::individual, n), make_weights(WeightFamily::beta, n, 4, 1),
          make_weights(WeightFamily::beta, n, 1, 16)};
}

}  // namespace

TEST(Weights, ShapleyThreeSources) {
  auto w = make_weights(WeightFamily::shapley, 3);
  EXPECT_NEAR(w.w[0], 1.0 / 3, 1e-15);
  EXPECT_NEAR(w.w[1], 1.0 / 6, 1e-15);
  EXPECT_NEAR(w.w[2], 1.0 / 3, 1e-15);
  EXPECT_TRUE(w.fair());
}

TEST(Weights, BanzhafFourSources) {
  auto w = make_weights(WeightFamily::banzhaf, 4);
  for (double x : w.w) EXPECT_EQ(x, 0.125);
  EXPECT_NEAR(w.normalization(), 1.0, 1e-15);
}

TEST(Weights, IndividualIsNotFair) {
  auto w = make_weights(WeightFamily::individual, 5);
  EXPECT_EQ(w.w, (std::vector<double>{1, 0, 0, 0, 0}));
  EXPECT_FALSE(w.fair());
}

TEST(Weights, BetaOneOneIsShapley) {
  for (int n = 1; n <= 12; ++n) {
    auto b = make_weights(WeightFamily::beta, n, 1, 1);
    auto s = make_weights(WeightFamily::shapley, n);
    for (int c = 0; c < n; ++c) EXPECT_NEAR(b.w[static_cast<std::size_t>(c)], s.w[static_cast<std::size_t>(c)], 1e-13);
  }
}

TEST(Weights, AllFamiliesNormalized) {
  for (int n = 1; n <= 20; ++n)
    for (const auto& w : all_families(n)) {
      EXPECT_NEAR(w.normalization(), 1.0, 1e-12) << w.label() << " n=" << n;
      for (double x : w.w) EXPECT_GE(x, 0.0);
    }
}

TEST(Weights, BetaWeightsEmphasizeSmallCoalitions) {
  // Beta(16,1) puts most weight on marginal contributions to small coalitions.
  auto w = make_weights(WeightFamily::beta, 6, 16, 1);
  std::vector<double> mass;
  for (int c = 0; c < 6; ++c) mass.push_back(w.w[static_cast<std::size_t>(c)] * std::exp(log_binomial(5, c)));
  EXPECT_TRUE(std::is_sorted(mass.rbegin(), mass.rend()));
}

TEST(Weights, ParseAndReject) {
  EXPECT_EQ(parse_weights("beta(4,1)", 3).label(), "beta(4,1)");
  EXPECT_EQ(parse_weights("banzhaf", 3).family, WeightFamily::banzhaf);
  EXPECT_THROW(parse_weights("beta(0.5,1)", 3), ConfigError);
  EXPECT_THROW(parse_weights("beta(4,)", 3), ConfigError);
  EXPECT_THROW(parse_weights("owen", 3), ConfigError);
  EXPECT_THROW(make_weights(WeightFamily::shapley, 0), ConfigError);
  EXPECT_THROW(custom_weights({0.5, 0.6}), ConfigError);
  EXPECT_THROW(custom_weights({-1.0, 2.0}), ConfigError);
  EXPECT_FALSE(custom_weights({0.5, 0.25, 0.0}).fair());
}

TEST(ExactSemivalue, Table4Game) {
  auto phi = exact_semivalue(table4(), make_weights(WeightFamily::shapley, 3));
  auto oracle = shapley_by_permutations(table4());
  EXPECT_NEAR(phi[0], 2.5, 1e-12);
  EXPECT_NEAR(phi[1], 2.5, 1e-12);
  EXPECT_NEAR(phi[2], 1.0, 1e-12);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(phi[static_cast<std::size_t>(i)], oracle[static_cast<std::size_t>(i)], 1e-12);
  EXPECT_NEAR(phi[0] + phi[1] + phi[2], 6.0, 1e-12);
}

TEST(ExactSemivalue, StrictMonotonicityExample) {
  // Every coalition containing source 1 loses one unit; the rest is unchanged.
  CharacteristicTable lowered(3, {0, 3, 2, 4, 1, 4, 3, 5});
  auto w = make_weights(WeightFamily::shapley, 3);
  auto before = exact_semivalue(table4(), w);
  auto after = exact_semivalue(lowered, w);
  EXPECT_NEAR(before[1], 2.5, 1e-12);
  EXPECT_NEAR(after[1], 1.5, 1e-12);
  EXPECT_NEAR(shapley_by_permutations(lowered)[1], 1.5, 1e-12);
  // Source 0's marginals are untouched, so it now outranks source 1.
  EXPECT_NEAR(after[0], 2.5, 1e-12);
  EXPECT_GT(after[0], after[1]);
}

TEST(ExactSemivalue, IndividualWeightsGiveStandaloneValue) {
  std::mt19937_64 rng(3);
  auto t = testutil::random_table(rng, 5);
  auto phi = exact_semivalue(t, make_weights(WeightFamily::individual, 5));
  for (int i = 0; i < 5; ++i) EXPECT_EQ(phi[static_cast<std::size_t>(i)], t[Coalition::single(i)]);
}

TEST(ExactSemivalue, DimensionMismatchIsConfigError) {
  EXPECT_THROW(exact_semivalue(table4(), make_weights(WeightFamily::shapley, 4)), ConfigError);
}

TEST(ExactSemivalue, GroupRationality) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    int n = 1 + static_cast<int>(rng() % 10);
    auto t = testutil::random_table(rng, n);
    auto phi = exact_semivalue(t, make_weights(WeightFamily::shapley, n));
    EXPECT_NEAR(std::accumulate(phi.begin(), phi.end(), 0.0), t.grand() - t.values[0], 1e-9);
  }
}

TEST(ExactSemivalue, NullPlayerGetsZero) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 2 + static_cast<int>(rng() % 6);
    int null = static_cast<int>(rng() % static_cast<unsigned>(n));
    auto t = testutil::random_table(rng, n);
    for (std::uint64_t m = 0; m < t.values.size(); ++m)
      if (m >> null & 1U) t.values[m] = t.values[m & ~(std::uint64_t{1} << null)];
    for (const auto& w : all_families(n)) EXPECT_EQ(exact_semivalue(t, w)[static_cast<std::size_t>(null)], 0.0);
  }
}

TEST(ExactSemivalue, SymmetricPlayersEqual) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 2 + static_cast<int>(rng() % 6);
    auto t = testutil::random_table(rng, n);
    // Make players 0 and 1 interchangeable: v(C + 0) = v(C + 1) for C without both.
    for (std::uint64_t m = 0; m < t.values.size(); ++m)
      if ((m & 3U) == 2U) t.values[m] = t.values[(m & ~std::uint64_t{3}) | 1U];
    for (const auto& w : all_families(n)) {
      auto phi = exact_semivalue(t, w);
      EXPECT_NEAR(phi[0], phi[1], 1e-12);
    }
  }
}

TEST(ExactSemivalue, RaisingMarginalsNeverLowersValue) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 2 + static_cast<int>(rng() % 6);
    int i = static_cast<int>(rng() % static_cast<unsigned>(n));
    auto low = testutil::random_table(rng, n);
    auto high = low;
    bool raised = false;
    for (std::uint64_t m = 0; m < low.values.size(); ++m)
      if ((m >> i & 1U) && (rng() & 1U)) {
        high.values[m] += testutil::unit(rng) + 1e-3;
        raised = true;
      }
    for (const auto& w : all_families(n)) {
      double a = exact_semivalue(high, w)[static_cast<std::size_t>(i)];
      double b = exact_semivalue(low, w)[static_cast<std::size_t>(i)];
      EXPECT_GE(a, b - 1e-12);
      if (raised && w.fair()) EXPECT_GT(a, b);
    }
  }
}

TEST(ExactSemivalue, Linear) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 1 + static_cast<int>(rng() % 7);
    auto a = testutil::random_table(rng, n);
    auto b = testutil::random_table(rng, n);
    double x = testutil::unit(rng) * 4 - 2, y = testutil::unit(rng) * 4 - 2;
    CharacteristicTable mix = a;
    for (std::size_t m = 0; m < mix.values.size(); ++m) mix.values[m] = x * a.values[m] + y * b.values[m];
    for (const auto& w : all_families(n)) {
      auto pa = exact_semivalue(a, w), pb = exact_semivalue(b, w), pm = exact_semivalue(mix, w);
      for (int i = 0; i < n; ++i) {
        auto k = static_cast<std::size_t>(i);
        EXPECT_NEAR(pm[k], x * pa[k] + y * pb[k], 1e-10);
      }
    }
  }
}

TEST(SampledShapley, SingleSourceIsExact) {
  CharacteristicTable t(1, {0.0, 2.75});
  auto value = [&](Coalition c) { return t[c]; };
  EXPECT_EQ(sampled_shapley(value, 1, 7, 1).values[0], 2.75);
}

TEST(SampledShapley, Table4WithinThreeStandardErrors) {
  auto t = table4();
  auto est = sampled_shapley([&](Coalition c) { return t[c]; }, 3, 5000, 42);
  std::vector<double> exact = {2.5, 2.5, 1.0};
  for (std::size_t i = 0; i < 3; ++i)
    EXPECT_LE(std::abs(est.values[i] - exact[i]), 3 * est.std_errors[i] + 1e-12);
}

TEST(SampledShapley, DeterministicAcrossRunsAndThreads) {
  std::mt19937_64 rng(10);
  auto t = testutil::random_table(rng, 8);
  auto value = [&](Coalition c) { return t[c]; };
  auto a = sampled_shapley(value, 8, 333, 99, 1);
  auto b = sampled_shapley(value, 8, 333, 99, 1);
  auto c = sampled_shapley(value, 8, 333, 99, 4);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(a.values, c.values);
  EXPECT_EQ(a.std_errors, c.std_errors);
  EXPECT_NE(a.values, sampled_shapley(value, 8, 333, 100, 1).values);
}

TEST(SampledShapley, EveryPermutationSumsToGrandValue) {
  std::mt19937_64 rng(11);
  auto t = testutil::random_table(rng, 6);
  auto est = sampled_shapley([&](Coalition c) { return t[c]; }, 6, 17, 5);
  EXPECT_NEAR(std::accumulate(est.values.begin(), est.values.end(), 0.0), t.grand(), 1e-12);
}

TEST(SampledShapley, RejectsNoPermutations) {
  EXPECT_THROW(sampled_shapley([](Coalition) { return 0.0; }, 2, 0, 1), ConfigError);
}

TEST(BudgetCap, Examples) {
  std::vector<double> phi = {0.04, 0.08};
  auto r = budget_cap(phi, 1.0, 0.06);
  EXPECT_EQ(r[0], 0.04);
  EXPECT_EQ(r[1], 0.06);
  std::vector<double> small = {0.02, 0.01, -0.5};
  auto s = budget_cap(small, 0.5, 0.06);
  EXPECT_EQ(s, (std::vector<double>{0.04, 0.02, -1.0}));
  EXPECT_THROW(budget_cap(phi, 0.0, 1.0), ConfigError);
  EXPECT_THROW(budget_cap(phi, 1.0, -1.0), ConfigError);
}

TEST(ScaledReward, Examples) {
  std::vector<double> a = {1, 2, 4};
  EXPECT_EQ(scaled_reward(a, 1.0, 0.0), (std::vector<double>{0.25, 0.5, 1.0}));
  std::vector<double> b = {3, 3};
  EXPECT_EQ(scaled_reward(b, 2.0, 1.0), (std::vector<double>{1.5, 1.5}));
  auto far = scaled_reward(a, 1.0, 1e12);
  for (double x : far) EXPECT_LT(x, 1e-11);
  std::vector<double> neg = {-2, -1};
  EXPECT_THROW(scaled_reward(neg, 1.0, 0.5), ConfigError);
}

TEST(ScaledReward, NeverExceedsBudget) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 1000; ++trial) {
    auto phi = testutil::normals(rng, 1 + static_cast<int>(rng() % 10));
    double top = *std::max_element(phi.begin(), phi.end());
    double gamma = std::max(0.0, -top) + testutil::unit(rng) + 1e-6;
    double budget = 0.01 + testutil::unit(rng);
    for (double r : scaled_reward(phi, budget, gamma)) EXPECT_LE(r, budget);
  }
}

TEST(RewardReport, Labels) {
  RewardReport r;
  EXPECT_EQ(r.estimator(), "exact");
  r.sampled_permutations = 3000;
  EXPECT_EQ(r.estimator(), "sampled(3000)");
  EXPECT_FALSE(r.unsafe());
  r.post = PostProcess::cross_grave;
  EXPECT_TRUE(r.unsafe());
}
