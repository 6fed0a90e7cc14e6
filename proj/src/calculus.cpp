#include "ergo/calculus.hpp"

#include <Eigen/SVD>

namespace ergo {

OperatorValue apply_elliptic_L(const DiffusionModel& model, const ScalarField& field, const Vec& x) {
  if (field_dim(field) != model.dim() || x.size() != model.dim()) {
    throw DimensionError("apply_elliptic_L: model, field and point dimensions must agree");
  }
  const FieldJet j = eval_field(field, x);
  SigmaMat s;
  model.sigma(x, s);
  Vec b;
  model.drift(x, b);
  // tr(sigma sigma^T H) = sum over columns of s_k^T H s_k.
  double tr = 0.0;
  for (int k = 0; k < s.cols(); ++k) {
    const Vec col = s.col(k);
    tr += col.dot(j.hess * col);
  }
  OperatorValue out;
  out.elliptic_L = -tr - b.dot(j.grad);
  out.markov_gen = -out.elliptic_L;
  return out;
}

double fd_operator_oracle(const DiffusionModel& model, const ScalarField& field, const Vec& x,
                          double h) {
  if (field_dim(field) != model.dim() || x.size() != model.dim()) {
    throw DimensionError("fd_operator_oracle: dimension mismatch");
  }
  if (h <= 0.0) h = default_fd_step(x);
  const int n = model.dim();
  const double f0 = field_value(field, x);
  Vec grad(n);
  Mat hess(n, n);
  Vec y = x;
  for (int i = 0; i < n; ++i) {
    y[i] = x[i] + h;
    const double fp = field_value(field, y);
    y[i] = x[i] - h;
    const double fm = field_value(field, y);
    y[i] = x[i];
    grad[i] = (fp - fm) / (2.0 * h);
    hess(i, i) = (fp - 2.0 * f0 + fm) / (h * h);
    for (int j = i + 1; j < n; ++j) {
      y[i] = x[i] + h;
      y[j] = x[j] + h;
      const double fpp = field_value(field, y);
      y[j] = x[j] - h;
      const double fpm = field_value(field, y);
      y[i] = x[i] - h;
      const double fmm = field_value(field, y);
      y[j] = x[j] + h;
      const double fmp = field_value(field, y);
      y[i] = x[i];
      y[j] = x[j];
      hess(i, j) = hess(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
    }
  }
  const Mat a = model.diffusion_matrix(x);
  const Vec b = model.drift(x);
  return -(a.cwiseProduct(hess)).sum() - b.dot(grad);
}

Vec eval_vector_field(const PolyVectorField& v, const Vec& x) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i].value(x);
  return out;
}

PolyVectorField lie_bracket(const PolyVectorField& v, const PolyVectorField& w) {
  if (v.size() != w.size() || v.empty()) throw DimensionError("lie_bracket: field size mismatch");
  const int n = static_cast<int>(v.size());
  for (const auto& c : v)
    if (c.dim() != n) throw DimensionError("lie_bracket: component dimension mismatch");
  for (const auto& c : w)
    if (c.dim() != n) throw DimensionError("lie_bracket: component dimension mismatch");
  PolyVectorField out(static_cast<std::size_t>(n), PolyField(n));
  for (int i = 0; i < n; ++i) {
    PolyField acc(n);
    for (int j = 0; j < n; ++j) {
      acc += w[static_cast<std::size_t>(i)].derivative(j) * v[static_cast<std::size_t>(j)];
      acc -= v[static_cast<std::size_t>(i)].derivative(j) * w[static_cast<std::size_t>(j)];
    }
    out[static_cast<std::size_t>(i)] = std::move(acc);
  }
  return out;
}

Vec lie_bracket(const PolyVectorField& v, const PolyVectorField& w, const Vec& x) {
  return eval_vector_field(lie_bracket(v, w), x);
}

HormanderRank hormander_rank(const DiffusionModel& model, const Vec& x, int max_order) {
  if (max_order < 0) throw ConfigError("hormander_rank: max_order must be >= 0");
  if (x.size() != model.dim()) throw DimensionError("hormander_rank: point dimension mismatch");
  const auto cols = model.sigma_columns_poly();
  if (!cols) {
    throw UnsupportedError("hormander_rank: model '" + model.name() +
                           "' has non-polynomial diffusion coefficients");
  }
  auto nonzero = [](const PolyVectorField& f) {
    for (const auto& c : f)
      if (!c.is_zero()) return true;
    return false;
  };

  std::vector<PolyVectorField> all;
  std::vector<PolyVectorField> level;
  for (const auto& c : *cols) {
    if (nonzero(c)) level.push_back(c);
  }
  const std::vector<PolyVectorField> base = level;
  all = level;
  for (int order = 1; order <= max_order; ++order) {
    std::vector<PolyVectorField> next;
    for (const auto& xk : base) {
      for (const auto& b : level) {
        PolyVectorField br = lie_bracket(xk, b);
        if (!nonzero(br)) continue;
        bool dup = false;
        for (const auto& e : next) {
          if (e == br) {
            dup = true;
            break;
          }
        }
        if (!dup) next.push_back(std::move(br));
      }
    }
    all.insert(all.end(), next.begin(), next.end());
    level = std::move(next);
    if (level.empty()) break;
  }

  HormanderRank out;
  out.generators = static_cast<int>(all.size());
  if (all.empty()) return out;
  Eigen::MatrixXd span(model.dim(), static_cast<Eigen::Index>(all.size()));
  for (std::size_t k = 0; k < all.size(); ++k) {
    span.col(static_cast<Eigen::Index>(k)) = eval_vector_field(all[k], x);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(span);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() ? sv[0] : 0.0;
  if (smax > 0.0) {
    for (Eigen::Index k = 0; k < sv.size(); ++k) {
      if (sv[k] > 1e-8 * smax) ++out.rank;
    }
  }
  out.spanning = out.rank == model.dim();
  return out;
}

}  // namespace ergo
