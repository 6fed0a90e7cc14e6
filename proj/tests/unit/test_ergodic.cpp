#include "ergo/ergodic.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ergo;

namespace {

EstimatorOptions opts(std::size_t M, double dt = 1e-2, std::uint64_t seed = 42) {
  EstimatorOptions o;
  o.M = M;
  o.dt = dt;
  o.seed = seed;
  o.workers = 4;
  return o;
}

// E f(X_t) for OU(gamma) from x0 with f = exp(-|x|^2 / (2 s^2)): Gaussian convolution in closed form.
double ou_gauss_mean(const Vec& x0, double gamma, double s, double t) {
  const double v = (1 - std::exp(-2 * gamma * t)) / gamma;
  const double m2 = std::exp(-2 * gamma * t) * x0.squaredNorm();
  const double d = static_cast<double>(x0.size());
  return std::pow(s * s / (s * s + v), d / 2) * std::exp(-m2 / (2 * (s * s + v)));
}

// delta * int_0^inf e^{-delta t} E f(X_t) dt by composite Simpson on [0, 60 / delta].
double ou_gauss_discounted(const Vec& x0, double gamma, double s, double delta) {
  const double T = 60 / delta;
  const int n = 200000;
  const double h = T / n;
  double acc = 0;
  for (int k = 0; k <= n; ++k) {
    const double t = k * h;
    const double w = (k == 0 || k == n) ? 1 : (k % 2 ? 4 : 2);
    acc += w * std::exp(-delta * t) * ou_gauss_mean(x0, gamma, s, t);
  }
  return delta * acc * h / 3;
}

}  // namespace

TEST(Horizon, Formula) {
  EXPECT_NEAR(discount_horizon(0.05, 1.0, 0.1), std::log(400.0) / 0.05, 1e-12);
  EXPECT_EQ(discount_horizon(0.1, 0.0, 0.1), 0.0);
  EXPECT_THROW(discount_horizon(0.0, 1.0, 0.1), ConfigError);
  EXPECT_THROW(discount_horizon(0.1, 1.0, 0.0), ConfigError);
}

TEST(Constants, DiscountedIsExact) {
  const auto m = build_heisenberg(DriftSpec::ou(1.0));
  const ScalarField c = PolyField::constant(3, 0.7);
  for (double delta : {0.4, 0.05}) {
    const auto e = u_delta(m, c, make_vec({1, 2, 3}), delta, opts(50));
    EXPECT_NEAR(e.value, 0.7 / delta, 1e-10 / delta);
    EXPECT_NEAR(e.se, 0.0, 1e-12 / delta);
  }
}

TEST(Constants, CauchyAndSpreadVanish) {
  const auto m = build_grushin(DriftSpec::ou(1.0));
  const ScalarField c = PolyField::constant(2, -1.5);
  EXPECT_DOUBLE_EQ(u_cauchy(m, c, make_vec({1, 1}), 2.0, opts(20)).value, -1.5);
  DiscountedConfig cfg;
  cfg.deltas = {0.4, 0.2, 0.1};
  cfg.x0s = {make_vec({0, 0}), make_vec({3, -3}), make_vec({-1, 5})};
  cfg.options = opts(30);
  const auto t = lambda_discounted(m, c, cfg);
  for (const auto& r : t.rows) EXPECT_NEAR(r.lambda_hat, -1.5, 1e-12);
  for (const auto& e : t.extrapolated) EXPECT_NEAR(e.value, -1.5, 1e-10);
  std::vector<std::vector<std::vector<double>>> s;
  for (std::size_t j = 0; j < cfg.deltas.size(); ++j) {
    s.emplace_back();
    for (const auto& pf : t.samples) s.back().push_back(pf.column_delta(j));
  }
  const auto rep = constancy_diagnostic(cfg.deltas, s);
  for (const auto& l : rep.levels) EXPECT_NEAR(l.spread, 0.0, 1e-12);
  EXPECT_TRUE(rep.pass());
}

TEST(Constants, CrossEstimatorPasses) {
  const auto m = build_ou_identity(1.0, 2);
  ErgodicConfig cfg;
  cfg.x0s = {make_vec({0, 0}), make_vec({2, 2})};
  cfg.deltas = {0.4, 0.2};
  cfg.times = {1.0, 2.0};
  cfg.options = opts(20);
  cfg.time_average_T = cfg.invariant_T = 50;
  cfg.time_average_burn = cfg.invariant_burn = 5;
  const auto r = cross_estimator_report(m, PolyField::constant(2, 0.25), cfg);
  EXPECT_EQ(r.verdict, Verdict::pass);
  EXPECT_NEAR(r.lambda_invariant.value, 0.25, 1e-12);
  EXPECT_NEAR(r.lambda_discounted.value, 0.25, 1e-10);
  EXPECT_EQ(r.comparisons.size(), 6u);
}

TEST(TimeZero, CauchyIsF) {
  const auto m = build_heisenberg(DriftSpec::ou(1.0));
  const ScalarField f = gaussian_field(3, 1.0);
  const Vec x0 = make_vec({0.5, -0.2, 1});
  const auto e = u_cauchy(m, f, x0, 0.0, opts(10));
  EXPECT_DOUBLE_EQ(e.value, field_value(f, x0));
  EXPECT_EQ(e.se, 0.0);
}

TEST(Bounds, PathwiseBoundsHold) {
  const auto m = build_heisenberg(DriftSpec::ou(1.0));
  PathFunctionalConfig cfg;
  cfg.deltas = {0.4, 0.1};
  cfg.times = {1.0, 5.0};
  cfg.M = 500;
  cfg.dt = 1e-2;
  const auto pf = sample_path_functionals(m, gaussian_field(3, 1.0, -2.0), make_vec({1, 1, 1}), cfg);
  EXPECT_EQ(pf.f_sup, 2.0);
  EXPECT_EQ(pf.discount_bound_violations, 0u);
  EXPECT_EQ(pf.cauchy_bound_violations, 0u);
  for (double v : pf.delta_u) EXPECT_LE(std::abs(v), 2.0 + 1e-12);
  for (double v : pf.f_at) EXPECT_LE(std::abs(v), 2.0);
  for (double v : pf.v_over_t) EXPECT_LE(std::abs(v), 2.0 + 1e-12);
}

TEST(Scale, LinearInObservable) {
  const auto m = build_grushin(DriftSpec::ou(1.0));
  const auto base = gaussian_field(2, 1.5);
  auto twice = base;
  twice.poly *= 2.0;
  PathFunctionalConfig cfg;
  cfg.deltas = {0.3};
  cfg.times = {2.0};
  cfg.M = 200;
  cfg.dt = 1e-2;
  cfg.f_sup = 2.0;  // the horizon depends on sup |f|; pin it so both runs match
  const Vec x0 = make_vec({1, 0});
  const auto a = sample_path_functionals(m, base, x0, cfg);
  const auto b = sample_path_functionals(m, twice, x0, cfg);
  for (std::size_t i = 0; i < a.delta_u.size(); ++i) EXPECT_NEAR(b.delta_u[i], 2 * a.delta_u[i], 1e-13);
  // Opaque field with the same values needs an explicit bound.
  BlackBoxField bb{"gauss", 2, [&](const Vec& x) { return field_value(base, x); }};
  auto no_sup = cfg;
  no_sup.f_sup.reset();
  EXPECT_THROW(sample_path_functionals(m, bb, x0, no_sup), ConfigError);
  const auto c = sample_path_functionals(m, bb, x0, cfg);
  EXPECT_EQ(c.delta_u, a.delta_u);
}

TEST(Unbounded, PolynomialNeedsSup) {
  const auto m = build_ou_identity(1.0, 1);
  EXPECT_THROW(u_delta(m, PolyField::coordinate(1, 0), make_vec({0}), 0.5, opts(10)), ConfigError);
}

TEST(MultiStart, MatchesSingleStart) {
  const auto m = build_heisenberg(DriftSpec::ou(1.0));
  PathFunctionalConfig cfg;
  cfg.deltas = {0.5};
  cfg.times = {1.0};
  cfg.M = 100;
  cfg.dt = 1e-2;
  const std::vector<Vec> x0s{make_vec({0, 0, 0}), make_vec({1, 2, 3})};
  const auto multi = sample_path_functionals(m, gaussian_field(3, 1.0), x0s, cfg);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto single = sample_path_functionals(m, gaussian_field(3, 1.0), x0s[i], cfg);
    EXPECT_EQ(multi[i].delta_u, single.delta_u);
    EXPECT_EQ(multi[i].f_at, single.f_at);
  }
}

TEST(Ou, CauchyMatchesClosedForm) {
  const auto m = build_ou_identity(1.0, 3);
  const Vec x0 = make_vec({1, 0, -1});
  const auto e = u_cauchy(m, gaussian_field(3, 1.0), x0, 1.0, opts(20000, 1e-3));
  EXPECT_NEAR(e.value, ou_gauss_mean(x0, 1.0, 1.0, 1.0), 4 * e.se + 2e-3);
}

TEST(Ou, DiscountedMatchesQuadrature) {
  const auto m = build_ou_identity(1.0, 3);
  const Vec x0 = make_vec({1, 1, 0});
  const double delta = 0.5;
  const auto e = u_delta(m, gaussian_field(3, 1.0), x0, delta, opts(10000, 5e-3));
  EXPECT_NEAR(delta * e.value, ou_gauss_discounted(x0, 1.0, 1.0, delta), 4 * delta * e.se + 3e-3);
}

TEST(Ou, TimeAverageEqualsOccupationIntegral) {
  const auto m = build_ou_identity(1.0, 2);
  TimeAverageConfig cfg;
  cfg.x0 = make_vec({0.3, 0.1});
  cfg.T = 200;
  cfg.burn = 10;
  cfg.dt = 1e-2;
  cfg.record_stride = 5;
  const auto f = gaussian_field(2, 1.0);
  const auto r = lambda_time_average(m, f, cfg);
  SimConfig sc;
  sc.dt = cfg.dt;
  sc.steps = 20000;
  sc.x0 = cfg.x0;
  sc.seed = cfg.seed;
  sc.record_stride = 5;
  const auto occ = occupation_measure(simulate_path(m, sc, 0), 10, 1);
  EXPECT_EQ(r.estimate.value, integrate_with_se(occ, [&](const Vec& x) { return field_value(f, x); }).value);
  // lambda = (1 + 1/s^2)^{-d/2} = 0.5 for d = 2, s = 1.
  EXPECT_NEAR(r.estimate.value, 0.5, 4 * r.estimate.se + 0.01);
}

TEST(Extrapolation, RemovesLinearBias) {
  const auto m = build_ou_identity(1.0, 1);
  DiscountedConfig cfg;
  cfg.deltas = {0.4, 0.2};
  cfg.x0s = {make_vec({1.5})};
  cfg.options = opts(8000, 5e-3);
  const auto t = lambda_discounted(m, gaussian_field(1, 1.0), cfg);
  const double lambda = std::sqrt(0.5);
  const double a = ou_gauss_discounted(cfg.x0s[0], 1.0, 1.0, 0.4), b = ou_gauss_discounted(cfg.x0s[0], 1.0, 1.0, 0.2);
  const double ext_oracle = 2 * b - a;
  EXPECT_NEAR(t.extrapolated[0].value, ext_oracle, 4 * t.extrapolated[0].se + 3e-3);
  EXPECT_LT(std::abs(ext_oracle - lambda), std::abs(b - lambda));
  EXPECT_THROW(lambda_discounted(m, gaussian_field(1, 1.0), DiscountedConfig{{0.2, 0.4}, cfg.x0s, cfg.options}),
               ConfigError);
}

TEST(Spread, SyntheticPairedSamples) {
  const std::vector<double> levels{0.4, 0.2, 0.1};
  std::vector<std::vector<std::vector<double>>> s{
      {{1, 1, 1, 1}, {1.1, 1.1, 1.1, 1.1}},
      {{1, 1, 1, 1}, {1.03, 1.03, 1.03, 1.03}},
      {{1, 1, 1, 1}, {1.001, 1.001, 1.001, 1.001}}};
  const auto rep = constancy_diagnostic(levels, s, 0.005);
  EXPECT_TRUE(rep.decreasing);
  EXPECT_TRUE(rep.final_pass);
  EXPECT_NEAR(rep.levels[0].spread, 0.1, 1e-12);
  EXPECT_EQ(rep.levels[0].argmax, 1u);
  EXPECT_EQ(rep.levels[0].combined_se, 0.0);
  std::swap(s[0], s[2]);
  EXPECT_FALSE(constancy_diagnostic(levels, s, 0.005).decreasing);
}

TEST(Spread, UnpairedUsesHypot) {
  const auto rep = constancy_diagnostic({1.0}, std::vector<std::vector<Estimate>>{{{0.5, 0.003}, {0.51, 0.004}}}, 0.0);
  EXPECT_NEAR(rep.levels[0].combined_se, 0.005, 1e-15);
  EXPECT_TRUE(rep.levels[0].pass);
}

TEST(Verdict, Names) {
  EXPECT_EQ(to_string(Verdict::pass), "pass");
  EXPECT_EQ(to_string(Verdict::fail), "fail");
  EXPECT_EQ(to_string(Verdict::inconclusive), "inconclusive");
}
