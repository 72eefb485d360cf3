#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fairval/gp.hpp"
#include "test_util.hpp"

using namespace fairval;

namespace {

Dataset point(double x, double y) {
  MatrixXd in(1, 1);
  in << x;
  VectorXd out(1);
  out << y;
  return Dataset(in, out);
}

Dataset permuted(const Dataset& d, std::mt19937_64& rng) {
  std::vector<Index> idx(static_cast<std::size_t>(d.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  return take_rows(d, idx);
}

GpHyper random_hyper(std::mt19937_64& rng, Index features) {
  GpHyper h = GpHyper::defaults(features);
  for (Index i = 0; i < features; ++i) h.lengthscales[i] = 0.5 + 2.0 * testutil::unit(rng);
  h.signal_var = 0.5 + 2.0 * testutil::unit(rng);
  h.noise_var = 0.05 + testutil::unit(rng);
  return h;
}

}  // namespace

TEST(GpPosterior, EmptyTrainGivesPrior) {
  GpHyper h = GpHyper::defaults(2);
  h.signal_var = 1.7;
  MatrixXd test(3, 2);
  test << 0, 0, 1, 0, 0.3, -2;
  GpPosterior post = gp_posterior(Dataset::empty_like(2), test, h);
  EXPECT_TRUE(post.mean.isZero());
  EXPECT_LE((post.cov - se_kernel(test, test, h)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(GpPosterior, SinglePointScalarAlgebra) {
  GpHyper h = GpHyper::defaults(1);
  MatrixXd test(1, 1);
  test << 0;
  GpPosterior post = gp_posterior(point(0, 0), test, h);
  EXPECT_NEAR(post.mean[0], 0.0, 1e-15);
  EXPECT_NEAR(post.cov(0, 0), 0.5, 1e-12);
}

TEST(GpPosterior, TwoPointHandSolve) {
  GpHyper h = GpHyper::defaults(1);
  h.lengthscales[0] = 0.8;
  h.signal_var = 1.5;
  h.noise_var = 0.2;
  Dataset train = concat(point(0.0, 1.0), point(1.0, -0.5));
  MatrixXd test(1, 1);
  test << 0.4;
  auto k = [&](double a, double b) { return 1.5 * std::exp(-0.5 * (a - b) * (a - b) / 0.64); };
  // (K + s I)^{-1} by the 2x2 adjugate formula.
  double a = k(0, 0) + 0.2, b = k(0, 1), d = k(1, 1) + 0.2, det = a * d - b * b;
  double i00 = d / det, i01 = -b / det, i11 = a / det;
  double k0 = k(0, 0.4), k1 = k(1, 0.4);
  double mean = (k0 * i00 + k1 * i01) * 1.0 + (k0 * i01 + k1 * i11) * -0.5;
  double var = k(0.4, 0.4) - (k0 * k0 * i00 + 2 * k0 * k1 * i01 + k1 * k1 * i11);
  GpPosterior post = gp_posterior(train, test, h);
  EXPECT_NEAR(post.mean[0], mean, 1e-12);
  EXPECT_NEAR(post.cov(0, 0), var, 1e-12);
}

TEST(GpPosterior, CovarianceSymmetricNonNegativeDiagonal) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    GpHyper h = random_hyper(rng, 2);
    Dataset train = testutil::random_regression(rng, static_cast<int>(rng() % 15), 2);
    Dataset test = testutil::random_regression(rng, 1 + static_cast<int>(rng() % 6), 2);
    GpPosterior post = gp_posterior(train, test.inputs, h);
    EXPECT_LE((post.cov - post.cov.transpose()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_GE(post.cov.diagonal().minCoeff(), 0.0);
  }
}

TEST(GpPosterior, DimensionMismatchIsInputError) {
  GpHyper h = GpHyper::defaults(2);
  Dataset train = Dataset(MatrixXd::Zero(2, 3), VectorXd::Zero(2));
  EXPECT_THROW(gp_posterior(train, MatrixXd::Zero(1, 2), h), InputError);
  EXPECT_THROW(gp_posterior(Dataset::empty_like(3), MatrixXd::Zero(1, 3), h), ConfigError);
}

TEST(GpLogPredictive, SinglePointExample) {
  GpHyper h = GpHyper::defaults(1);
  double lp = gp_log_predictive(point(0, 0), point(0, 0), h);
  EXPECT_NEAR(lp, -0.5 * std::log(2 * M_PI * 1.5), 1e-12);
  EXPECT_NEAR(lp, -1.1216710872587549, 1e-9);
}

TEST(GpLogPredictive, FarAwayValidationFallsBackToPrior) {
  GpHyper h = GpHyper::defaults(1);
  h.lengthscales[0] = 1e-3;
  h.signal_var = 2.0;
  h.noise_var = 0.5;
  Dataset val = concat(point(10.0, 0.7), point(20.0, -1.1));
  double expected = -0.5 * (2 * std::log(2 * M_PI * 2.5) + (0.49 + 1.21) / 2.5);
  EXPECT_NEAR(gp_log_predictive(point(0.0, 3.0), val, h), expected, 1e-10);
}

TEST(GpLogPredictive, TwoPointsChainRule) {
  GpHyper h = GpHyper::defaults(1);
  Dataset train = point(0.0, 0.5);
  Dataset t1 = point(0.3, 0.2), t2 = point(-0.4, 1.0);
  double chain = gp_log_predictive(train, t1, h) + gp_log_predictive(concat(train, t1), t2, h);
  EXPECT_NEAR(gp_log_predictive(train, concat(t1, t2), h), chain, 1e-10);
}

TEST(GpLogPredictive, ChainRuleOnRandomInstances) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 60; ++trial) {
    Index d = 1 + static_cast<Index>(rng() % 3);
    GpHyper h = random_hyper(rng, d);
    Dataset train = testutil::random_regression(rng, static_cast<int>(rng() % 21), static_cast<int>(d));
    Dataset val = testutil::random_regression(rng, 1 + static_cast<int>(rng() % 5), static_cast<int>(d));
    double chain = 0.0;
    Dataset seen = train;
    for (Index r = 0; r < val.size(); ++r) {
      Index row[] = {r};
      Dataset t = take_rows(val, row);
      chain += gp_log_predictive(seen, t, h);
      seen = concat(seen, t);
    }
    EXPECT_NEAR(gp_log_predictive(train, val, h), chain, 1e-8);
  }
}

TEST(GpLogPredictive, PermutationInvariant) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 40; ++trial) {
    GpHyper h = random_hyper(rng, 2);
    Dataset train = testutil::random_regression(rng, static_cast<int>(rng() % 15), 2);
    Dataset val = testutil::random_regression(rng, 1 + static_cast<int>(rng() % 6), 2);
    double base = gp_log_predictive(train, val, h);
    EXPECT_NEAR(gp_log_predictive(permuted(train, rng), permuted(val, rng), h), base, 1e-10);
  }
}

TEST(GpLogPredictive, MoreDataNeverIncreasesLatentVariance) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 40; ++trial) {
    GpHyper h = random_hyper(rng, 2);
    Dataset train = testutil::random_regression(rng, static_cast<int>(rng() % 12), 2);
    Dataset extra = testutil::random_regression(rng, 1, 2);
    Dataset test = testutil::random_regression(rng, 8, 2);
    VectorXd before = gp_posterior(train, test.inputs, h).cov.diagonal();
    VectorXd after = gp_posterior(concat(train, extra), test.inputs, h).cov.diagonal();
    EXPECT_LE((after - before).maxCoeff(), 1e-10);
  }
}

TEST(GpLogPredictive, MeanLogMatchesPointwiseScores) {
  std::mt19937_64 rng(31);
  GpHyper h = random_hyper(rng, 2);
  Dataset train = testutil::random_regression(rng, 10, 2);
  Dataset val = testutil::random_regression(rng, 5, 2);
  double total = 0.0;
  for (Index r = 0; r < val.size(); ++r) {
    Index row[] = {r};
    total += gp_log_predictive(train, take_rows(val, row), h);
  }
  EXPECT_NEAR(gp_mean_log_predictive(train, val, h), total / 5.0, 1e-10);
}

TEST(GpLogPredictive, DuplicateInputsFactorizeWithJitter) {
  GpHyper h = GpHyper::defaults(1);
  h.noise_var = 1e-12;
  Dataset train = concat(point(0.0, 0.1), point(0.0, 0.1));
  EXPECT_NO_THROW(gp_log_predictive(train, point(0.5, 0.0), h));
}

TEST(GpLogPredictive, EmptyValidationIsInputError) {
  EXPECT_THROW(gp_log_predictive(point(0, 0), Dataset::empty_like(1), GpHyper::defaults(1)), InputError);
}

TEST(GpInformationGain, GrowsWithDuplication) {
  std::mt19937_64 rng(37);
  GpHyper h = GpHyper::defaults(2);
  Dataset d = testutil::random_regression(rng, 6, 2);
  EXPECT_EQ(gp_information_gain(Dataset::empty_like(2), h), 0.0);
  EXPECT_GT(gp_information_gain(concat(d, d), h), gp_information_gain(d, h));
}
