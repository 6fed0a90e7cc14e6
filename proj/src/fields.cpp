#include "ergo/fields.hpp"

#include <cmath>

namespace ergo {

namespace {

FieldJet enveloped_jet(const EnvelopedField& f, const Vec& x) {
  if (!(f.scale > 0.0)) throw ConfigError("envelope scale must be positive");
  const int n = f.dim();
  Vec d = x;
  if (f.center) {
    if (f.center->size() != n) throw DimensionError("envelope center dimension mismatch");
    d -= *f.center;
  }
  const double s2 = f.scale * f.scale;
  const double g = std::exp(-d.squaredNorm() / (2.0 * s2));
  Vec dg = -g / s2 * d;
  Mat hg = (g / (s2 * s2)) * (d * d.transpose()) - (g / s2) * Mat::Identity(n, n);

  FieldJet p = f.poly.jet(x);
  FieldJet out;
  out.value = p.value * g;
  out.grad = p.grad * g + p.value * dg;
  out.hess = p.hess * g + p.grad * dg.transpose() + dg * p.grad.transpose() + p.value * hg;
  return out;
}

FieldJet blackbox_jet(const BlackBoxField& f, const Vec& x) {
  const int n = f.dim;
  const double h = f.fd_step > 0.0 ? f.fd_step : default_fd_step(x);
  FieldJet out;
  out.value = f.fn(x);
  out.grad = Vec::Zero(n);
  out.hess = Mat::Zero(n, n);
  Vec y = x;
  for (int i = 0; i < n; ++i) {
    y[i] = x[i] + h;
    const double fp = f.fn(y);
    y[i] = x[i] - h;
    const double fm = f.fn(y);
    y[i] = x[i];
    out.grad[i] = (fp - fm) / (2.0 * h);
    out.hess(i, i) = (fp - 2.0 * out.value + fm) / (h * h);
    for (int j = i + 1; j < n; ++j) {
      double acc = 0.0;
      for (int si : {1, -1}) {
        for (int sj : {1, -1}) {
          y[i] = x[i] + si * h;
          y[j] = x[j] + sj * h;
          acc += si * sj * f.fn(y);
        }
      }
      y[i] = x[i];
      y[j] = x[j];
      out.hess(i, j) = out.hess(j, i) = acc / (4.0 * h * h);
    }
  }
  return out;
}

}  // namespace

double default_fd_step(const Vec& x) { return 1e-4 * (1.0 + x.norm()); }

int field_dim(const ScalarField& field) {
  return std::visit(
      [](const auto& f) -> int {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, BlackBoxField>) {
          return f.dim;
        } else {
          return f.dim();
        }
      },
      field);
}

double field_value(const ScalarField& field, const Vec& x) {
  if (x.size() != field_dim(field)) throw DimensionError("point dimension does not match field");
  if (const auto* p = std::get_if<PolyField>(&field)) return p->value(x);
  if (const auto* e = std::get_if<EnvelopedField>(&field)) {
    Vec d = x;
    if (e->center) d -= *e->center;
    return e->poly.value(x) * std::exp(-d.squaredNorm() / (2.0 * e->scale * e->scale));
  }
  return std::get<BlackBoxField>(field).fn(x);
}

FieldJet eval_field(const ScalarField& field, const Vec& x) {
  if (x.size() != field_dim(field)) throw DimensionError("point dimension does not match field");
  if (const auto* p = std::get_if<PolyField>(&field)) return p->jet(x);
  if (const auto* e = std::get_if<EnvelopedField>(&field)) return enveloped_jet(*e, x);
  return blackbox_jet(std::get<BlackBoxField>(field), x);
}

std::optional<double> sup_abs_bound(const ScalarField& field) {
  if (const auto* p = std::get_if<PolyField>(&field)) {
    if (p->degree() == 0) return p->terms().empty() ? 0.0 : std::abs(p->terms()[0].coef);
    return std::nullopt;
  }
  if (const auto* e = std::get_if<EnvelopedField>(&field)) {
    // sup_t |t|^a exp(-t^2/(2s^2)) = (a s^2)^{a/2} e^{-a/2}; the envelope factorizes per
    // coordinate, so each monomial is bounded by the product of these maxima.
    if (e->center && !e->center->isZero()) {
      // Shifted envelope: |x_i|^a <= (|x_i - c_i| + |c_i|)^a; fall back to a loose
      // binomial bound per coordinate.
      double total = 0.0;
      const double s2 = e->scale * e->scale;
      for (const auto& t : e->poly.terms()) {
        double b = std::abs(t.coef);
        for (int i = 0; i < e->dim(); ++i) {
          const int a = t.exp[static_cast<std::size_t>(i)];
          if (a == 0) continue;
          const double c = std::abs((*e->center)[i]);
          double acc = 0.0;
          double binom = 1.0;
          for (int k = 0; k <= a; ++k) {
            const double m = k == 0 ? 1.0 : std::pow(k * s2, 0.5 * k) * std::exp(-0.5 * k);
            acc += binom * m * std::pow(c, a - k);
            binom = binom * (a - k) / (k + 1);
          }
          b *= acc;
        }
        total += b;
      }
      return total;
    }
    double total = 0.0;
    const double s2 = e->scale * e->scale;
    for (const auto& t : e->poly.terms()) {
      double b = std::abs(t.coef);
      for (int i = 0; i < e->dim(); ++i) {
        const int a = t.exp[static_cast<std::size_t>(i)];
        if (a > 0) b *= std::pow(a * s2, 0.5 * a) * std::exp(-0.5 * a);
      }
      total += b;
    }
    return total;
  }
  return std::nullopt;
}

EnvelopedField gaussian_field(int dim, double scale, double amplitude) {
  if (!(scale > 0.0)) throw ConfigError("gaussian scale must be positive");
  return EnvelopedField{PolyField::constant(dim, amplitude), scale, std::nullopt};
}

}  // namespace ergo
