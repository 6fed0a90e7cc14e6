#pragma once

#include "ergo/types.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace ergo {

using Exponent = std::array<std::uint8_t, kMaxDim>;

struct Monomial {
  Exponent exp{};
  double coef = 0.0;
};

/// Value, gradient and Hessian of a scalar field at one point.
struct FieldJet {
  double value = 0.0;
  Vec grad;
  Mat hess;
};

/// Sparse multivariate polynomial with exact derivatives.
///
/// Terms are kept sorted by exponent and merged, so two polynomials with the
/// same coefficients compare equal regardless of construction order.
class PolyField {
 public:
  PolyField() = default;
  explicit PolyField(int dim);
  PolyField(int dim, std::vector<Monomial> terms);

  static PolyField constant(int dim, double c);
  /// The coordinate function x_i (0-based).
  static PolyField coordinate(int dim, int i);
  static PolyField monomial(int dim, std::initializer_list<int> exps, double coef);

  int dim() const { return dim_; }
  const std::vector<Monomial>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  int degree() const;

  double value(const Vec& x) const;
  FieldJet jet(const Vec& x) const;

  PolyField derivative(int i) const;

  PolyField& operator+=(const PolyField& other);
  PolyField& operator-=(const PolyField& other);
  PolyField& operator*=(double s);
  friend PolyField operator+(PolyField a, const PolyField& b) { return a += b; }
  friend PolyField operator-(PolyField a, const PolyField& b) { return a -= b; }
  friend PolyField operator*(PolyField a, double s) { return a *= s; }
  friend PolyField operator*(double s, PolyField a) { return a *= s; }
  friend PolyField operator*(const PolyField& a, const PolyField& b);
  friend bool operator==(const PolyField& a, const PolyField& b);

  std::string to_string() const;

 private:
  void normalize();

  int dim_ = 0;
  std::vector<Monomial> terms_;
};

}  // namespace ergo
