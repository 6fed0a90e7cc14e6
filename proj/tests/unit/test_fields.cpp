#include "ergo/fields.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace ergo;

TEST(EnvelopedField, UnitGaussianAtOrigin) {
  const ScalarField f = gaussian_field(3, 1.0);
  const FieldJet j = eval_field(f, Vec::Zero(3));
  EXPECT_DOUBLE_EQ(j.value, 1.0);
  EXPECT_TRUE(j.grad.isZero());
  EXPECT_TRUE(j.hess.isApprox(Mat(-Mat::Identity(3, 3)), 1e-15));
}

TEST(EnvelopedField, HandDifferentiatedAwayFromOrigin) {
  // g = x1 exp(-|x|^2/8), s = 2; dg/dx1 = (1 - x1^2/4) e, d2g/dx1dx2 = -(x2/4)(1 - x1^2/4) e.
  const ScalarField f = EnvelopedField{PolyField::coordinate(2, 0), 2.0, std::nullopt};
  const Vec x = make_vec({1.0, 0.5});
  const double e = std::exp(-(1.0 + 0.25) / 8.0);
  const FieldJet j = eval_field(f, x);
  EXPECT_NEAR(j.value, e, 1e-15);
  EXPECT_NEAR(j.grad[0], 0.75 * e, 1e-15);
  EXPECT_NEAR(j.grad[1], -(0.5 / 4.0) * e, 1e-15);
  EXPECT_NEAR(j.hess(0, 1), -(0.5 / 4.0) * 0.75 * e, 1e-15);
  EXPECT_NEAR(j.hess(0, 1), j.hess(1, 0), 1e-16);
}

TEST(EnvelopedField, CenterShiftsEnvelopeOnly) {
  const ScalarField f = EnvelopedField{PolyField::constant(2, 3.0), 1.0, make_vec({1, 1})};
  EXPECT_DOUBLE_EQ(field_value(f, make_vec({1, 1})), 3.0);
}

TEST(EnvelopedField, JetMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3, 3);
  PolyField p = PolyField::monomial(3, {1, 1, 0}, 1.5) + PolyField::monomial(3, {0, 0, 2}, -0.5) +
                PolyField::constant(3, 0.25);
  const ScalarField f = EnvelopedField{p, 1.7, make_vec({0.2, -0.1, 0.3})};
  for (int trial = 0; trial < 200; ++trial) {
    const Vec x = make_vec({u(rng), u(rng), u(rng)});
    const FieldJet j = eval_field(f, x);
    const double h = 1e-4;
    for (int i = 0; i < 3; ++i) {
      Vec e = Vec::Zero(3);
      e[i] = h;
      const double g = (field_value(f, x + e) - field_value(f, x - e)) / (2 * h);
      EXPECT_NEAR(j.grad[i], g, 1e-6 * (1 + std::abs(g)));
      for (int k = 0; k < 3; ++k) {
        Vec d = Vec::Zero(3);
        d[k] = h;
        const double hk = (field_value(f, x + e + d) - field_value(f, x + e - d) - field_value(f, x - e + d) +
                           field_value(f, x - e - d)) /
                          (4 * h * h);
        EXPECT_NEAR(j.hess(i, k), hk, 1e-5 * (1 + std::abs(hk)));
      }
    }
  }
}

TEST(EnvelopedField, DerivativesDecayFarOut) {
  const double s = 1.5;
  const ScalarField f = EnvelopedField{PolyField::monomial(3, {2, 1, 0}, 1.0), s, std::nullopt};
  const FieldJet j = eval_field(f, make_vec({10 * s, 0.3, -0.2}));
  EXPECT_LT(std::abs(j.value), 1e-15);
  EXPECT_LT(j.grad.norm(), 1e-15);
  EXPECT_LT(j.hess.norm(), 1e-15);
}

TEST(SupBound, CertifiedAboveSampledMaximum) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-6, 6);
  const ScalarField f = EnvelopedField{PolyField::monomial(2, {2, 1}, -2.0) + PolyField::constant(2, 0.5), 1.0,
                                       std::nullopt};
  const double bound = *sup_abs_bound(f);
  double sampled = 0;
  for (int i = 0; i < 100000; ++i) sampled = std::max(sampled, std::abs(field_value(f, make_vec({u(rng), u(rng)}))));
  EXPECT_GE(bound, sampled);
}

TEST(SupBound, GaussianAmplitude) { EXPECT_DOUBLE_EQ(*sup_abs_bound(gaussian_field(3, 1.0, 2.5)), 2.5); }

TEST(SupBound, UnboundedAndOpaqueFields) {
  EXPECT_FALSE(sup_abs_bound(PolyField::coordinate(3, 0)).has_value());
  EXPECT_DOUBLE_EQ(*sup_abs_bound(PolyField::constant(3, -4.0)), 4.0);
  const ScalarField bb = BlackBoxField{"sin", 1, [](const Vec& x) { return std::sin(x[0]); }};
  EXPECT_FALSE(sup_abs_bound(bb).has_value());
}

TEST(BlackBoxField, FiniteDifferenceJetOfQuadratic) {
  const ScalarField f = BlackBoxField{"q", 2, [](const Vec& x) { return x[0] * x[0] + 3 * x[0] * x[1]; }};
  const FieldJet j = eval_field(f, make_vec({1.0, 2.0}));
  EXPECT_NEAR(j.grad[0], 8.0, 1e-6);
  EXPECT_NEAR(j.grad[1], 3.0, 1e-6);
  EXPECT_NEAR(j.hess(0, 0), 2.0, 1e-5);
  EXPECT_NEAR(j.hess(0, 1), 3.0, 1e-5);
  EXPECT_NEAR(j.hess(1, 1), 0.0, 1e-5);
}

TEST(Fields, DimensionChecks) {
  EXPECT_EQ(field_dim(gaussian_field(4, 1.0)), 4);
  EXPECT_THROW(field_value(gaussian_field(3, 1.0), make_vec({1, 2})), DimensionError);
}

TEST(Fields, DefaultStep) { EXPECT_DOUBLE_EQ(default_fd_step(make_vec({3, 4})), 1e-4 * 6.0); }
