#include <gtest/gtest.h>

#include <random>

#include "fairval/datagen.hpp"
#include "fairval/mechanism.hpp"
#include "test_util.hpp"

using namespace fairval;

TEST(CrossRewards, IdenticalSourcesSameSeedsAreSymmetric) {
  std::mt19937_64 rng(1);
  Dataset d = testutil::random_regression(rng, 12, 2);
  std::vector<std::uint64_t> seeds = {77, 77};
  auto r = cross_validation_rewards({d, d}, 0.25, make_weights(WeightFamily::shapley, 2),
                                    BayesLinReg::isotropic(2, 1.0, 0.5), seeds);
  EXPECT_EQ(r.breve[0], r.breve[1]);
  EXPECT_EQ(r.grave[0], r.grave[1]);
}

TEST(CrossRewards, GamesAreAnchoredAtZero) {
  std::mt19937_64 rng(2);
  std::vector<Dataset> sources;
  for (int i = 0; i < 3; ++i) sources.push_back(testutil::random_regression(rng, 8, 2));
  auto r = cross_validation_rewards(sources, 0.25, make_weights(WeightFamily::shapley, 3), GpHyper::defaults(2),
                                    std::uint64_t{5});
  for (const auto& g : r.games) EXPECT_EQ(g[Coalition{}], 0.0);
}

TEST(CrossRewards, BetaToyMatchesDoubleLoop) {
  std::mt19937_64 rng(3);
  std::vector<Dataset> sources;
  for (int i = 0; i < 3; ++i) sources.push_back(testutil::random_bits(rng, 6 + 2 * i));
  const BayesianModel model = BetaBernoulli{1.0, 1.0};
  auto weights = make_weights(WeightFamily::shapley, 3);
  auto seeds = cross_split_seeds(9, 3);
  auto r = cross_validation_rewards(sources, 0.25, weights, model, seeds);

  // Independent recomputation: split, build each game directly, sum semivalues.
  std::vector<Dataset> train, val;
  for (int j = 0; j < 3; ++j) {
    Split s = split_train_validation(sources[static_cast<std::size_t>(j)], 0.25, seeds[static_cast<std::size_t>(j)]);
    train.push_back(s.train);
    val.push_back(s.validation);
  }
  std::vector<std::vector<double>> phi;
  for (int j = 0; j < 3; ++j)
    phi.push_back(exact_semivalue(build_char_table(train, DvfSpec{DvfKind::log_score, model, val[static_cast<std::size_t>(j)]}), weights));
  for (int i = 0; i < 3; ++i) {
    double breve = 0.0;
    for (int j = 0; j < 3; ++j)
      if (j != i) breve += phi[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
    double grave = breve + phi[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
    EXPECT_NEAR(r.breve[static_cast<std::size_t>(i)], breve, 1e-12);
    EXPECT_NEAR(r.grave[static_cast<std::size_t>(i)], grave, 1e-12);
  }
}

TEST(CrossRewards, GraveMinusBreveIsDiagonal) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    int n = 2 + static_cast<int>(rng() % 3);
    std::vector<Dataset> sources;
    for (int i = 0; i < n; ++i) sources.push_back(testutil::random_regression(rng, 4 + static_cast<int>(rng() % 6), 2));
    auto r = cross_validation_rewards(sources, 0.3, make_weights(WeightFamily::banzhaf, n),
                                      BayesLinReg::isotropic(2, 1, 1, true), rng());
    for (int i = 0; i < n; ++i)
      EXPECT_NEAR(r.grave[static_cast<std::size_t>(i)] - r.breve[static_cast<std::size_t>(i)], r.per_game(i, i), 1e-12);
  }
}

TEST(CrossRewards, TooSmallSourceNamed) {
  std::mt19937_64 rng(5);
  std::vector<Dataset> sources = {testutil::random_regression(rng, 8, 1), testutil::random_regression(rng, 1, 1)};
  try {
    cross_validation_rewards(sources, 0.25, make_weights(WeightFamily::shapley, 2), BayesLinReg::isotropic(1, 1, 1),
                             std::uint64_t{1});
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("source 1"), std::string::npos) << e.what();
  }
  EXPECT_THROW(cross_validation_rewards({sources[0]}, 0.25, make_weights(WeightFamily::shapley, 1),
                                        BayesLinReg::isotropic(1, 1, 1), std::uint64_t{1}),
               ConfigError);
}

TEST(CrossRewards, SplitSeedsDependOnSourceIndex) {
  auto s = cross_split_seeds(3, 4);
  EXPECT_EQ(s, cross_split_seeds(3, 4));
  EXPECT_NE(s[0], s[1]);
}
