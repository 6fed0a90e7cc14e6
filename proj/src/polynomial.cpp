#include "ergo/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ergo {

namespace {

bool exp_less(const Exponent& a, const Exponent& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

void check_dim(int dim) {
  if (dim < 1 || dim > kMaxDim) {
    throw DimensionError("polynomial dimension must be in [1, " + std::to_string(kMaxDim) + "]");
  }
}

// x^k for small non-negative integer k, by repeated multiplication.
double ipow(double x, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

}  // namespace

PolyField::PolyField(int dim) : dim_(dim) { check_dim(dim); }

PolyField::PolyField(int dim, std::vector<Monomial> terms) : dim_(dim), terms_(std::move(terms)) {
  check_dim(dim);
  for (const auto& t : terms_) {
    for (int i = dim_; i < kMaxDim; ++i) {
      if (t.exp[static_cast<std::size_t>(i)] != 0) {
        throw DimensionError("monomial uses a coordinate beyond the polynomial dimension");
      }
    }
  }
  normalize();
}

PolyField PolyField::constant(int dim, double c) {
  Monomial m;
  m.coef = c;
  return PolyField(dim, {m});
}

PolyField PolyField::coordinate(int dim, int i) {
  if (i < 0 || i >= dim) throw DimensionError("coordinate index out of range");
  Monomial m;
  m.exp[static_cast<std::size_t>(i)] = 1;
  m.coef = 1.0;
  return PolyField(dim, {m});
}

PolyField PolyField::monomial(int dim, std::initializer_list<int> exps, double coef) {
  if (static_cast<int>(exps.size()) != dim) throw DimensionError("exponent list length != dim");
  Monomial m;
  std::size_t i = 0;
  for (int e : exps) {
    if (e < 0 || e > 255) throw ConfigError("exponent out of range");
    m.exp[i++] = static_cast<std::uint8_t>(e);
  }
  m.coef = coef;
  return PolyField(dim, {m});
}

void PolyField::normalize() {
  std::sort(terms_.begin(), terms_.end(),
            [](const Monomial& a, const Monomial& b) { return exp_less(a.exp, b.exp); });
  std::vector<Monomial> merged;
  merged.reserve(terms_.size());
  for (const auto& t : terms_) {
    if (!merged.empty() && merged.back().exp == t.exp) {
      merged.back().coef += t.coef;
    } else {
      merged.push_back(t);
    }
  }
  merged.erase(std::remove_if(merged.begin(), merged.end(),
                              [](const Monomial& m) { return m.coef == 0.0; }),
               merged.end());
  terms_ = std::move(merged);
}

int PolyField::degree() const {
  int deg = 0;
  for (const auto& t : terms_) {
    int d = 0;
    for (int i = 0; i < dim_; ++i) d += t.exp[static_cast<std::size_t>(i)];
    deg = std::max(deg, d);
  }
  return deg;
}

double PolyField::value(const Vec& x) const {
  if (x.size() != dim_) throw DimensionError("point dimension does not match polynomial");
  double sum = 0.0;
  for (const auto& t : terms_) {
    double p = t.coef;
    for (int i = 0; i < dim_; ++i) p *= ipow(x[i], t.exp[static_cast<std::size_t>(i)]);
    sum += p;
  }
  return sum;
}

FieldJet PolyField::jet(const Vec& x) const {
  if (x.size() != dim_) throw DimensionError("point dimension does not match polynomial");
  const int n = dim_;
  FieldJet out;
  out.grad = Vec::Zero(n);
  out.hess = Mat::Zero(n, n);

  // Per-coordinate factor and its first/second derivatives for one monomial.
  std::array<double, kMaxDim> f0{}, f1{}, f2{};
  for (const auto& t : terms_) {
    for (int i = 0; i < n; ++i) {
      const int a = t.exp[static_cast<std::size_t>(i)];
      f0[i] = ipow(x[i], a);
      f1[i] = a >= 1 ? a * ipow(x[i], a - 1) : 0.0;
      f2[i] = a >= 2 ? a * (a - 1) * ipow(x[i], a - 2) : 0.0;
    }
    double v = t.coef;
    for (int i = 0; i < n; ++i) v *= f0[i];
    out.value += v;
    for (int i = 0; i < n; ++i) {
      if (t.exp[static_cast<std::size_t>(i)] == 0) continue;
      double g = t.coef * f1[i];
      for (int k = 0; k < n; ++k)
        if (k != i) g *= f0[k];
      out.grad[i] += g;
      for (int j = i; j < n; ++j) {
        double h = t.coef;
        if (j == i) {
          h *= f2[i];
          for (int k = 0; k < n; ++k)
            if (k != i) h *= f0[k];
        } else {
          h *= f1[i] * f1[j];
          for (int k = 0; k < n; ++k)
            if (k != i && k != j) h *= f0[k];
        }
        out.hess(i, j) += h;
        if (j != i) out.hess(j, i) += h;
      }
    }
  }
  return out;
}

PolyField PolyField::derivative(int i) const {
  if (i < 0 || i >= dim_) throw DimensionError("derivative index out of range");
  std::vector<Monomial> out;
  for (const auto& t : terms_) {
    const int a = t.exp[static_cast<std::size_t>(i)];
    if (a == 0) continue;
    Monomial m = t;
    m.coef *= a;
    m.exp[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(a - 1);
    out.push_back(m);
  }
  return PolyField(dim_, std::move(out));
}

PolyField& PolyField::operator+=(const PolyField& other) {
  if (other.dim_ != dim_) throw DimensionError("polynomial dimension mismatch");
  terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
  normalize();
  return *this;
}

PolyField& PolyField::operator-=(const PolyField& other) {
  if (other.dim_ != dim_) throw DimensionError("polynomial dimension mismatch");
  for (auto t : other.terms_) {
    t.coef = -t.coef;
    terms_.push_back(t);
  }
  normalize();
  return *this;
}

PolyField& PolyField::operator*=(double s) {
  for (auto& t : terms_) t.coef *= s;
  normalize();
  return *this;
}

PolyField operator*(const PolyField& a, const PolyField& b) {
  if (a.dim_ != b.dim_) throw DimensionError("polynomial dimension mismatch");
  std::vector<Monomial> out;
  out.reserve(a.terms_.size() * b.terms_.size());
  for (const auto& ta : a.terms_) {
    for (const auto& tb : b.terms_) {
      Monomial m;
      for (std::size_t i = 0; i < static_cast<std::size_t>(kMaxDim); ++i) {
        const int e = ta.exp[i] + tb.exp[i];
        if (e > 255) throw ConfigError("polynomial degree overflow");
        m.exp[i] = static_cast<std::uint8_t>(e);
      }
      m.coef = ta.coef * tb.coef;
      out.push_back(m);
    }
  }
  return PolyField(a.dim_, std::move(out));
}

bool operator==(const PolyField& a, const PolyField& b) {
  if (a.dim_ != b.dim_ || a.terms_.size() != b.terms_.size()) return false;
  for (std::size_t k = 0; k < a.terms_.size(); ++k) {
    if (a.terms_[k].exp != b.terms_[k].exp || a.terms_[k].coef != b.terms_[k].coef) return false;
  }
  return true;
}

std::string PolyField::to_string() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& t : terms_) {
    if (!first) os << " + ";
    first = false;
    os << t.coef;
    for (int i = 0; i < dim_; ++i) {
      const int a = t.exp[static_cast<std::size_t>(i)];
      if (a == 1) os << "*x" << (i + 1);
      if (a > 1) os << "*x" << (i + 1) << "^" << a;
    }
  }
  return os.str();
}

}  // namespace ergo
