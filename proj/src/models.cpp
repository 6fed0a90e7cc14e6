#include "ergo/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ergo {

double DriftTable::operator()(double xi) const {
  const std::size_t n = x.size();
  if (n == 1) return b[0];
  std::size_t hi;
  if (xi <= x.front()) {
    hi = 1;
  } else if (xi >= x.back()) {
    hi = n - 1;
  } else {
    hi = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), xi) - x.begin());
  }
  const std::size_t lo = hi - 1;
  const double t = (xi - x[lo]) / (x[hi] - x[lo]);
  return b[lo] + t * (b[hi] - b[lo]);
}

DriftSpec DriftSpec::zero() { return DriftSpec{}; }

DriftSpec DriftSpec::ou(double gamma) {
  DriftSpec d;
  d.kind = DriftKind::ou;
  d.gamma = gamma;
  return d;
}

DriftSpec DriftSpec::power(std::vector<double> C, double alpha, double R) {
  DriftSpec d;
  d.kind = DriftKind::power;
  d.C = std::move(C);
  d.alpha = alpha;
  d.R = R;
  return d;
}

DriftSpec DriftSpec::table(std::vector<DriftTable> tables) {
  DriftSpec d;
  d.kind = DriftKind::table;
  d.tables = std::move(tables);
  return d;
}

void DriftSpec::validate(int dim) const {
  switch (kind) {
    case DriftKind::zero:
      return;
    case DriftKind::ou:
      if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("ou drift needs gamma > 0");
      return;
    case DriftKind::power:
      if (static_cast<int>(C.size()) != dim) {
        throw ConfigError("power drift needs one constant C_i per coordinate (expected " +
                          std::to_string(dim) + ", got " + std::to_string(C.size()) + ")");
      }
      for (double c : C) {
        if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("power drift needs C_i > 0");
      }
      if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("power drift needs alpha >= 0");
      if (!(R > 0.0) || !std::isfinite(R)) throw ConfigError("power drift needs R > 0");
      return;
    case DriftKind::table:
      if (static_cast<int>(tables.size()) != dim) {
        throw ConfigError("table drift needs one table per coordinate");
      }
      for (const auto& t : tables) {
        if (t.x.empty() || t.x.size() != t.b.size()) throw ConfigError("malformed drift table");
        for (std::size_t k = 1; k < t.x.size(); ++k) {
          if (!(t.x[k] > t.x[k - 1])) throw ConfigError("drift table knots must increase");
        }
      }
      return;
  }
}

double DriftSpec::power_gain() const {
  if (alpha >= 2.0) return 1.0;
  return std::pow(1.0 + 1.0 / (R * R), 0.5 * (2.0 - alpha));
}

double DriftSpec::component(int i, double xi) const {
  switch (kind) {
    case DriftKind::zero:
      return 0.0;
    case DriftKind::ou:
      return -gamma * xi;
    case DriftKind::power: {
      const double c = C[static_cast<std::size_t>(i)] * power_gain();
      if (alpha == 2.0) return -c * xi;
      return -c * xi * std::pow(xi * xi + 1.0, 0.5 * (alpha - 2.0));
    }
    case DriftKind::table:
      return tables[static_cast<std::size_t>(i)](xi);
  }
  return 0.0;
}

double DriftSpec::linear_growth_constant(int dim) const {
  switch (kind) {
    case DriftKind::zero:
      return 0.0;
    case DriftKind::ou:
      return gamma;
    case DriftKind::power: {
      if (alpha > 2.0) return std::numeric_limits<double>::infinity();
      double c = 0.0;
      for (double ci : C) c = std::max(c, ci * power_gain());
      return c;
    }
    case DriftKind::table: {
      double c = 0.0;
      for (const auto& t : tables) {
        double bmax = 0.0, smax = 0.0, xmax = 0.0;
        for (std::size_t k = 0; k < t.x.size(); ++k) {
          bmax = std::max(bmax, std::abs(t.b[k]));
          xmax = std::max(xmax, std::abs(t.x[k]));
          if (k > 0) smax = std::max(smax, std::abs((t.b[k] - t.b[k - 1]) / (t.x[k] - t.x[k - 1])));
        }
        c = std::max(c, std::max(bmax + smax * xmax, smax));
      }
      return std::sqrt(static_cast<double>(dim)) * c;
    }
  }
  return 0.0;
}

std::string DriftSpec::to_string() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind) {
    case DriftKind::zero:
      os << "zero";
      break;
    case DriftKind::ou:
      os << "ou:gamma=" << gamma;
      break;
    case DriftKind::power: {
      os << "power:C=";
      for (std::size_t i = 0; i < C.size(); ++i) os << (i ? "," : "") << C[i];
      os << ";alpha=" << alpha << ";R=" << R;
      break;
    }
    case DriftKind::table:
      os << "table";
      break;
  }
  return os.str();
}

// ---------------------------------------------------------------------------

void DiffusionModel::finalize() {
  switch (reg_) {
    case Regularization::none:
      noise_dim_ = base_noise_;
      break;
    case Regularization::last_axis:
      noise_dim_ = base_noise_ + 1;
      break;
    case Regularization::identity:
      noise_dim_ = base_noise_ + dim_;
      break;
  }
  if (noise_dim_ > kMaxNoise) throw DimensionError("noise dimension exceeds capacity");

  double sig = 0.0;
  const double r2 = rho_ * rho_;
  switch (kind_) {
    case ModelKind::heisenberg:
      // |sigma|_F^2 = 2 + 4 (x1^2 + x2^2) + rho^2.
      sig = std::max(2.0, std::sqrt(2.0 + r2));
      break;
    case ModelKind::grushin:
      sig = std::max(1.0, std::sqrt(1.0 + r2));
      break;
    case ModelKind::lions_musiela:
      sig = std::sqrt(2.0 + r2);
      break;
    case ModelKind::ou_identity:
      sig = std::sqrt(dim_ * (1.0 + (reg_ == Regularization::identity ? r2 : 0.0)));
      break;
  }
  if (reg_ == Regularization::identity && kind_ != ModelKind::ou_identity) {
    sig = std::sqrt(sig * sig + dim_ * r2);
  }
  growth_bound_ = std::max(sig, drift_.linear_growth_constant(dim_));
}

void DiffusionModel::sigma(const Vec& x, SigmaMat& out) const {
  out.setZero(dim_, noise_dim_);
  switch (kind_) {
    case ModelKind::heisenberg:
      out(0, 0) = 1.0;
      out(1, 1) = 1.0;
      out(2, 0) = 2.0 * x[1];
      out(2, 1) = -2.0 * x[0];
      break;
    case ModelKind::grushin:
      out(0, 0) = 1.0;
      out(1, 1) = x[0];
      break;
    case ModelKind::lions_musiela:
      out(0, 0) = 1.0;
      out(1, 1) = x[0] / std::sqrt(1.0 + x[0] * x[0]);
      break;
    case ModelKind::ou_identity:
      for (int i = 0; i < dim_; ++i) out(i, i) = 1.0;
      break;
  }
  if (reg_ == Regularization::last_axis) {
    out(dim_ - 1, base_noise_) = rho_;
  } else if (reg_ == Regularization::identity) {
    for (int i = 0; i < dim_; ++i) out(i, base_noise_ + i) = rho_;
  }
}

SigmaMat DiffusionModel::sigma(const Vec& x) const {
  if (x.size() != dim_) throw DimensionError("point dimension does not match model");
  SigmaMat s;
  sigma(x, s);
  return s;
}

void DiffusionModel::apply_sigma(const Vec& x, const NoiseVec& xi, Vec& out) const {
  out.resize(dim_);
  switch (kind_) {
    case ModelKind::heisenberg:
      out[0] = xi[0];
      out[1] = xi[1];
      out[2] = 2.0 * x[1] * xi[0] - 2.0 * x[0] * xi[1];
      break;
    case ModelKind::grushin:
      out[0] = xi[0];
      out[1] = x[0] * xi[1];
      break;
    case ModelKind::lions_musiela:
      out[0] = xi[0];
      out[1] = x[0] / std::sqrt(1.0 + x[0] * x[0]) * xi[1];
      break;
    case ModelKind::ou_identity:
      for (int i = 0; i < dim_; ++i) out[i] = xi[i];
      break;
  }
  if (reg_ == Regularization::last_axis) {
    out[dim_ - 1] += rho_ * xi[base_noise_];
  } else if (reg_ == Regularization::identity) {
    for (int i = 0; i < dim_; ++i) out[i] += rho_ * xi[base_noise_ + i];
  }
}

void DiffusionModel::drift(const Vec& x, Vec& out) const {
  out.resize(dim_);
  if (drift_.kind == DriftKind::ou) {
    for (int i = 0; i < dim_; ++i) out[i] = -drift_.gamma * x[i];
    return;
  }
  for (int i = 0; i < dim_; ++i) out[i] = drift_.component(i, x[i]);
}

Vec DiffusionModel::drift(const Vec& x) const {
  if (x.size() != dim_) throw DimensionError("point dimension does not match model");
  Vec b;
  drift(x, b);
  return b;
}

Mat DiffusionModel::diffusion_matrix(const Vec& x) const {
  const SigmaMat s = sigma(x);
  return s * s.transpose();
}

std::optional<std::vector<std::vector<PolyField>>> DiffusionModel::sigma_columns_poly() const {
  if (kind_ == ModelKind::lions_musiela) return std::nullopt;
  const int n = dim_;
  std::vector<std::vector<PolyField>> cols(static_cast<std::size_t>(noise_dim_),
                                           std::vector<PolyField>(n, PolyField(n)));
  switch (kind_) {
    case ModelKind::heisenberg:
      cols[0][0] = PolyField::constant(n, 1.0);
      cols[0][2] = 2.0 * PolyField::coordinate(n, 1);
      cols[1][1] = PolyField::constant(n, 1.0);
      cols[1][2] = -2.0 * PolyField::coordinate(n, 0);
      break;
    case ModelKind::grushin:
      cols[0][0] = PolyField::constant(n, 1.0);
      cols[1][1] = PolyField::coordinate(n, 0);
      break;
    case ModelKind::ou_identity:
      for (int i = 0; i < n; ++i) cols[static_cast<std::size_t>(i)][i] = PolyField::constant(n, 1.0);
      break;
    case ModelKind::lions_musiela:
      break;
  }
  if (reg_ == Regularization::last_axis) {
    cols[static_cast<std::size_t>(base_noise_)][n - 1] = PolyField::constant(n, rho_);
  } else if (reg_ == Regularization::identity) {
    for (int i = 0; i < n; ++i) {
      cols[static_cast<std::size_t>(base_noise_ + i)][i] = PolyField::constant(n, rho_);
    }
  }
  return cols;
}

// ---------------------------------------------------------------------------

DiffusionModel build_heisenberg(const DriftSpec& drift) {
  drift.validate(3);
  DiffusionModel m;
  m.name_ = "heisenberg";
  m.kind_ = ModelKind::heisenberg;
  m.dim_ = 3;
  m.base_noise_ = 2;
  m.drift_ = drift;
  m.finalize();
  return m;
}

DiffusionModel build_grushin(const DriftSpec& drift) {
  drift.validate(2);
  DiffusionModel m;
  m.name_ = "grushin";
  m.kind_ = ModelKind::grushin;
  m.dim_ = 2;
  m.base_noise_ = 2;
  m.drift_ = drift;
  m.finalize();
  return m;
}

DiffusionModel build_lions_musiela(const DriftSpec& drift) {
  drift.validate(2);
  DiffusionModel m;
  m.name_ = "lions-musiela";
  m.kind_ = ModelKind::lions_musiela;
  m.dim_ = 2;
  m.base_noise_ = 2;
  m.drift_ = drift;
  m.finalize();
  return m;
}

DiffusionModel build_ou_identity(double gamma, int dim) {
  if (dim < 1 || dim > kMaxDim) throw ConfigError("ou dimension out of range");
  const DriftSpec drift = DriftSpec::ou(gamma);
  drift.validate(dim);
  DiffusionModel m;
  m.name_ = "ou";
  m.kind_ = ModelKind::ou_identity;
  m.dim_ = dim;
  m.base_noise_ = dim;
  m.drift_ = drift;
  m.finalize();
  return m;
}

namespace {

void check_rho(double rho) {
  if (!(rho >= 0.0) || !std::isfinite(rho)) throw ConfigError("rho must be >= 0");
}

void check_unregularized(const DiffusionModel& model) {
  if (model.regularization() != Regularization::none) {
    throw UnsupportedError("model '" + model.name() + "' is already regularized");
  }
}

}  // namespace

DiffusionModel regularize_heisenberg(const DiffusionModel& model, double rho) {
  if (model.kind() != ModelKind::heisenberg) {
    throw UnsupportedError("regularize_heisenberg applied to model '" + model.name() + "'");
  }
  check_rho(rho);
  check_unregularized(model);
  DiffusionModel m = model;
  m.rho_ = rho;
  m.reg_ = Regularization::last_axis;
  m.finalize();
  return m;
}

DiffusionModel regularize_grushin(const DiffusionModel& model, double rho) {
  if (model.kind() != ModelKind::grushin && model.kind() != ModelKind::lions_musiela) {
    throw UnsupportedError("regularize_grushin applied to model '" + model.name() + "'");
  }
  check_rho(rho);
  check_unregularized(model);
  DiffusionModel m = model;
  m.rho_ = rho;
  m.reg_ = Regularization::last_axis;
  m.finalize();
  return m;
}

DiffusionModel regularize(const DiffusionModel& model, double rho) {
  switch (model.kind()) {
    case ModelKind::heisenberg:
      return regularize_heisenberg(model, rho);
    case ModelKind::grushin:
    case ModelKind::lions_musiela:
      return regularize_grushin(model, rho);
    case ModelKind::ou_identity: {
      check_rho(rho);
      check_unregularized(model);
      DiffusionModel m = model;
      m.rho_ = rho;
      m.reg_ = Regularization::identity;
      m.finalize();
      return m;
    }
  }
  throw UnsupportedError("unknown model kind");
}

Vec exact_ou_transition(const Vec& x0, double gamma, double t, const Vec& noise) {
  if (!(gamma > 0.0)) throw ConfigError("exact OU transition needs gamma > 0");
  if (!(t >= 0.0)) throw ConfigError("exact OU transition needs t >= 0");
  if (noise.size() != x0.size()) throw DimensionError("noise dimension mismatch");
  if (t == 0.0) return x0;
  const double decay = std::exp(-gamma * t);
  const double sd = std::sqrt(-std::expm1(-2.0 * gamma * t) / gamma);
  return decay * x0 + sd * noise;
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::heisenberg:
      return "heisenberg";
    case ModelKind::grushin:
      return "grushin";
    case ModelKind::lions_musiela:
      return "lions-musiela";
    case ModelKind::ou_identity:
      return "ou";
  }
  return "unknown";
}

ModelKind parse_model_kind(const std::string& name) {
  if (name == "heisenberg") return ModelKind::heisenberg;
  if (name == "grushin") return ModelKind::grushin;
  if (name == "lions-musiela" || name == "lions_musiela") return ModelKind::lions_musiela;
  if (name == "ou" || name == "ou-identity" || name == "ou_identity") return ModelKind::ou_identity;
  throw ConfigError("unknown model '" + name + "'");
}

DiffusionModel build_model(const std::string& name, const DriftSpec& drift, double rho, int dim) {
  DiffusionModel base = [&] {
    switch (parse_model_kind(name)) {
      case ModelKind::heisenberg:
        return build_heisenberg(drift);
      case ModelKind::grushin:
        return build_grushin(drift);
      case ModelKind::lions_musiela:
        return build_lions_musiela(drift);
      case ModelKind::ou_identity:
        if (drift.kind != DriftKind::ou) throw ConfigError("model 'ou' requires an ou drift");
        return build_ou_identity(drift.gamma, dim);
    }
    throw ConfigError("unknown model");
  }();
  check_rho(rho);
  return rho > 0.0 ? regularize(base, rho) : base;
}

}  // namespace ergo
