#include "ergo/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

using namespace ergo;

TEST(MeanAndSe, HandComputed) {
  const std::vector<double> xs{1, 2, 3, 4};
  const Estimate e = mean_and_se(xs);
  EXPECT_DOUBLE_EQ(e.value, 2.5);
  // sample variance 5/3, SE = sqrt(5/3 / 4)
  EXPECT_NEAR(e.se, std::sqrt(5.0 / 12.0), 1e-15);
}

TEST(MeanAndSe, ConstantHasZeroSe) {
  const std::vector<double> xs(10, 0.7);
  EXPECT_EQ(mean_and_se(xs).se, 0.0);
}

TEST(BatchMeans, IidSeriesMatchesNaiveSe) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  std::vector<double> xs(64000);
  for (auto& x : xs) x = n01(rng);
  const Estimate b = batch_means(xs, 32);
  EXPECT_NEAR(b.se, 1.0 / std::sqrt(64000.0), 0.35 / std::sqrt(64000.0));
  EXPECT_DOUBLE_EQ(b.value, std::accumulate(xs.begin(), xs.end(), 0.0) / 64000.0);
}

TEST(BatchMeans, Ar1SeriesInflatesSe) {
  // AR(1) with phi = 0.9: long-run variance is (1 + phi) / (1 - phi) = 19 times the iid one.
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  const double phi = 0.9;
  std::vector<double> xs(320000);
  double x = 0;
  for (auto& v : xs) {
    x = phi * x + std::sqrt(1 - phi * phi) * n01(rng);
    v = x;
  }
  const double expected = std::sqrt(19.0 / 320000.0);
  EXPECT_NEAR(batch_means(xs, 32).se, expected, 0.35 * expected);
}

TEST(KsTwoSample, IdenticalIsZero) {
  const std::vector<double> a{0.3, 1.0, -2.0}, w{1, 1, 1};
  EXPECT_EQ(ks_two_sample(a, w, a, w), 0.0);
}

TEST(KsTwoSample, DisjointIsOne) {
  const std::vector<double> a{0, 1}, b{2, 3}, w{1, 1};
  EXPECT_DOUBLE_EQ(ks_two_sample(a, w, b, w), 1.0);
}

TEST(KsTwoSample, HandComputedWithTies) {
  // F_a jumps 1/2 at 0 and 1; F_b jumps 1/4 at 0 and 3/4 at 1 -> sup diff 1/4.
  const std::vector<double> a{0, 1}, wa{1, 1}, b{0, 1, 1, 1}, wb{1, 1, 1, 1};
  EXPECT_DOUBLE_EQ(ks_two_sample(a, wa, b, wb), 0.25);
}

TEST(KsTwoSample, WeightsActAsMultiplicity) {
  const std::vector<double> a{0, 1}, wa{1, 3}, b{0, 1, 1, 1}, wb{1, 1, 1, 1};
  EXPECT_NEAR(ks_two_sample(a, wa, b, wb), 0.0, 1e-15);
}

TEST(KsAgainstCdf, UniformHandComputed) {
  // Points 0.25 and 0.75 vs U(0,1): sup |F_n - F| = 0.25.
  const std::vector<double> xs{0.25, 0.75}, w{1, 1};
  auto cdf = [](double x) { return std::clamp(x, 0.0, 1.0); };
  EXPECT_DOUBLE_EQ(ks_against_cdf(xs, w, cdf), 0.25);
}

TEST(KsNoiseScale, Formula) { EXPECT_DOUBLE_EQ(ks_noise_scale(100, 400), std::sqrt(500.0 / 40000.0)); }
