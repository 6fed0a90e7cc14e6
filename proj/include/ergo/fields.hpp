#pragma once

#include "ergo/polynomial.hpp"

#include <functional>
#include <optional>
#include <string>
#include <variant>

namespace ergo {

/// poly(x) * exp(-|x - c|^2 / (2 s^2)).
struct EnvelopedField {
  PolyField poly;
  double scale = 1.0;
  std::optional<Vec> center;

  int dim() const { return poly.dim(); }
};

/// Opaque callable; derivatives come from central differences.
struct BlackBoxField {
  std::string name;
  int dim = 0;
  std::function<double(const Vec&)> fn;
  /// Finite-difference step; <= 0 selects 1e-4 * (1 + |x|).
  double fd_step = 0.0;
  /// The callable only approximates the intended object (e.g. a cutoff surrogate).
  bool approximate = false;
};

using ScalarField = std::variant<PolyField, EnvelopedField, BlackBoxField>;

int field_dim(const ScalarField& field);

double field_value(const ScalarField& field, const Vec& x);

/// Value, gradient, Hessian. Exact for polynomial and enveloped fields.
FieldJet eval_field(const ScalarField& field, const Vec& x);

/// A certified upper bound on sup |f|, or nullopt if the field is unbounded
/// (non-constant polynomial) or opaque.
std::optional<double> sup_abs_bound(const ScalarField& field);

/// exp(-|x|^2 / (2 s^2)) scaled by `amplitude`: the default bounded observable.
EnvelopedField gaussian_field(int dim, double scale, double amplitude = 1.0);

/// Default FD step used across the library: 1e-4 * (1 + |x|).
double default_fd_step(const Vec& x);

}  // namespace ergo
