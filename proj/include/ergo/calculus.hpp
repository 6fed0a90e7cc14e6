#pragma once

#include "ergo/fields.hpp"
#include "ergo/models.hpp"

#include <vector>

namespace ergo {

/// L u = -tr(sigma sigma^T D^2 u) - b . Du and the Markov generator -L u.
struct OperatorValue {
  double elliptic_L = 0.0;
  double markov_gen = 0.0;
};

OperatorValue apply_elliptic_L(const DiffusionModel& model, const ScalarField& field, const Vec& x);

/// Same operator from central differences of field values only; h <= 0 selects
/// the default step 1e-4 (1 + |x|).
double fd_operator_oracle(const DiffusionModel& model, const ScalarField& field, const Vec& x,
                          double h = 0.0);

using PolyVectorField = std::vector<PolyField>;

Vec eval_vector_field(const PolyVectorField& v, const Vec& x);

/// Symbolic bracket [V, W] = DW V - DV W.
PolyVectorField lie_bracket(const PolyVectorField& v, const PolyVectorField& w);

/// [V, W](x).
Vec lie_bracket(const PolyVectorField& v, const PolyVectorField& w, const Vec& x);

struct HormanderRank {
  int rank = 0;
  bool spanning = false;
  /// Number of vectors (columns plus brackets) that entered the span.
  int generators = 0;
};

/// Rank of span{sigma columns, brackets up to `max_order`} at x. Singular values
/// below 1e-8 * (largest singular value) count as zero.
HormanderRank hormander_rank(const DiffusionModel& model, const Vec& x, int max_order);

}  // namespace ergo
