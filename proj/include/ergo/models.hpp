#pragma once

#include "ergo/polynomial.hpp"
#include "ergo/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ergo {

enum class DriftKind { zero, ou, power, table };

/// Piecewise-linear drift component: knots sorted by x, linear extrapolation.
struct DriftTable {
  std::vector<double> x;
  std::vector<double> b;

  double operator()(double xi) const;
};

/// Separable drift b_i(x) = b_i(x_i).
///
/// power: b_i(x) = -C_i * k * x (x^2 + 1)^((alpha - 2) / 2) with k chosen so that
/// b_i <= -C_i |x|^(alpha-1) for x >= R (and the mirrored bound for x <= -R).
struct DriftSpec {
  DriftKind kind = DriftKind::zero;
  double gamma = 1.0;
  std::vector<double> C;
  double alpha = 0.0;
  double R = 1.0;
  std::vector<DriftTable> tables;

  static DriftSpec zero();
  static DriftSpec ou(double gamma);
  static DriftSpec power(std::vector<double> C, double alpha, double R = 1.0);
  static DriftSpec table(std::vector<DriftTable> tables);

  /// Throws ConfigError on invalid parameters; `dim` is the model dimension.
  void validate(int dim) const;

  /// Gain k >= 1 applied to the power drift (1 for alpha >= 2).
  double power_gain() const;

  double component(int i, double xi) const;

  /// Constant c with |b(x)| <= c (|x| + 1); +inf when superlinear.
  double linear_growth_constant(int dim) const;

  std::string to_string() const;
};

enum class ModelKind { heisenberg, grushin, lions_musiela, ou_identity };

enum class Regularization {
  none,
  /// One extra noise column rho * e_N, the default for Heisenberg and Grushin.
  last_axis,
  /// N extra columns rho * I, so A_rho = A + rho^2 I.
  identity,
};

/// dX = b(X) dt + sqrt(2) sigma(X) dW.
///
/// Immutable after construction. sigma() and drift() write into fixed-capacity
/// buffers and never allocate.
class DiffusionModel {
 public:
  const std::string& name() const { return name_; }
  ModelKind kind() const { return kind_; }
  int dim() const { return dim_; }
  int noise_dim() const { return noise_dim_; }
  double rho() const { return rho_; }
  Regularization regularization() const { return reg_; }
  const DriftSpec& drift_spec() const { return drift_; }
  double growth_bound() const { return growth_bound_; }

  void sigma(const Vec& x, SigmaMat& out) const;
  SigmaMat sigma(const Vec& x) const;

  /// out = sigma(x) * xi without forming sigma.
  void apply_sigma(const Vec& x, const NoiseVec& xi, Vec& out) const;

  void drift(const Vec& x, Vec& out) const;
  Vec drift(const Vec& x) const;

  /// A = sigma sigma^T.
  Mat diffusion_matrix(const Vec& x) const;

  /// sigma columns as polynomial vector fields; nullopt for non-polynomial sigma.
  std::optional<std::vector<std::vector<PolyField>>> sigma_columns_poly() const;

  friend DiffusionModel build_heisenberg(const DriftSpec& drift);
  friend DiffusionModel build_grushin(const DriftSpec& drift);
  friend DiffusionModel build_lions_musiela(const DriftSpec& drift);
  friend DiffusionModel build_ou_identity(double gamma, int dim);
  friend DiffusionModel regularize(const DiffusionModel& model, double rho);
  friend DiffusionModel regularize_heisenberg(const DiffusionModel& model, double rho);
  friend DiffusionModel regularize_grushin(const DiffusionModel& model, double rho);

 private:
  void finalize();

  std::string name_;
  ModelKind kind_ = ModelKind::ou_identity;
  int dim_ = 1;
  int base_noise_ = 1;
  int noise_dim_ = 1;
  double rho_ = 0.0;
  Regularization reg_ = Regularization::none;
  DriftSpec drift_;
  double growth_bound_ = 0.0;
};

/// sigma rows (1,0), (0,1), (2 x2, -2 x1).
DiffusionModel build_heisenberg(const DriftSpec& drift);
/// sigma = diag(1, x1).
DiffusionModel build_grushin(const DriftSpec& drift);
/// sigma = diag(1, x1 / sqrt(1 + x1^2)): bounded variant of Grushin.
DiffusionModel build_lions_musiela(const DriftSpec& drift);
/// sigma = I, b = -gamma x. Stationary law N(0, I / gamma).
DiffusionModel build_ou_identity(double gamma, int dim);

/// Appends (0,0,rho) to the Heisenberg sigma. rho = 0 keeps a zero column.
DiffusionModel regularize_heisenberg(const DiffusionModel& model, double rho);
/// Appends (0,rho) to the Grushin / Lions-Musiela sigma.
DiffusionModel regularize_grushin(const DiffusionModel& model, double rho);
/// Model-appropriate regularization: the single extra column where one
/// exists, rho * I columns otherwise.
DiffusionModel regularize(const DiffusionModel& model, double rho);

/// Exact transition of dX = -gamma X dt + sqrt(2) dW over time t.
Vec exact_ou_transition(const Vec& x0, double gamma, double t, const Vec& noise);

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

/// Build a catalogue model by name: heisenberg, grushin, lions-musiela, ou.
/// For `ou` the drift must be of OU kind and `dim` selects the dimension.
DiffusionModel build_model(const std::string& name, const DriftSpec& drift, double rho,
                           int dim = 3);

}  // namespace ergo
