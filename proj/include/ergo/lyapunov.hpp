#pragma once

#include "ergo/calculus.hpp"

#include <string>
#include <vector>

namespace ergo {

struct LyapunovCandidate {
  ScalarField field;
  DiffusionModel model;
  /// Required lower bound k in L w >= k.
  double target = 1.0;
};

enum class SphereSampling { grid, low_discrepancy };

struct ShellScanConfig {
  double r_min = 1.0;
  double r_max = 10.0;
  int shells = 10;
  int samples_per_shell = 512;
  SphereSampling sampling = SphereSampling::low_discrepancy;
  /// Cap on stored violation points (the count is always exact).
  std::size_t max_violations_kept = 1000;
  int workers = 1;

  void validate() const;
  /// Radius of shell i; shells are evenly spaced and include both endpoints.
  double radius(int i) const;
};

struct ShellMin {
  double r = 0.0;
  double min_value = 0.0;
  Vec argmin;
  std::size_t violations = 0;
};

struct LyapunovReport {
  std::vector<ShellMin> shells;
  std::vector<Vec> violations;
  std::size_t violation_count = 0;
  /// Sample points with w < 0 (the candidate must be non-negative outside R0).
  std::size_t negative_w_count = 0;
  /// Smallest scanned radius beyond which no shell has violations; +inf when the
  /// outermost shell violates.
  double r0_estimate = 0.0;
  bool passed = false;
};

/// Deterministic point sets on the sphere of radius r in R^dim.
std::vector<Vec> sphere_points(int dim, double r, int count, SphereSampling sampling);

/// (x1^4 + x2^4)/12 + x3^2/2 for "heisenberg", x1^4/12 + x2^2/2 for "grushin".
PolyField canonical_w(const std::string& model_kind);
PolyField canonical_w(ModelKind kind);

/// -5 (x1^2 + x2^2) - rho^2 - (b1 x1^3 + b2 x2^3)/3 - b3 x3.
double heisenberg_Lw_closed_form(const DriftSpec& drift, double rho, const Vec& x);

LyapunovReport scan_shells(const LyapunovCandidate& candidate, const ShellScanConfig& cfg);

/// Bisection on the single-shell pass predicate down to (r_max - r_min)/shells.
/// Throws NotFoundError when the shell at r_max already fails.
double find_min_R0(const LyapunovCandidate& candidate, const ShellScanConfig& cfg);

/// Sufficient constants for the alpha = 0 drift class: C1, C2 > C1_min = C2_min = 15
/// and C3 > C3_min. K_i = max |b_i| on [-R, R].
struct Alpha0Thresholds {
  double C1_min = 15.0;
  double C2_min = 15.0;
  double C3_min = 1.0;
};

Alpha0Thresholds alpha0_thresholds(double R, double K1, double K2, double K3);

/// max |b_i| over [-R, R], by dense sampling (exact for monotone components).
double drift_sup_on_interval(const DriftSpec& drift, int i, double R, int samples = 20001);

struct WitnessPoint {
  Vec x;
  double phi = 0.0;
};

/// w_flat = w + K + K_G + 1 with phi = L w_flat + chi w_flat >= 1 everywhere.
struct WitnessC2Barra {
  double r0 = 0.0;
  double K = 0.0;
  double K_G = 0.0;
  PolyField w_flat;
  /// Smooth radial cutoff: 1 on B(0, R0), 0 outside B(0, 2 R0).
  ScalarField chi;
  std::vector<WitnessPoint> phi_values;
  double phi_min = 0.0;
  /// max chi over verification points with |x| >= 2 R0.
  double support_residual = 0.0;
  bool phi_radially_increasing = false;

  double phi(const DiffusionModel& model, const Vec& x) const;
};

struct WitnessConfig {
  /// Grid points in the bounding cube of B(0, R0) for the K and K_G maxima.
  std::size_t grid_points = 1'000'000;
  /// Verification grid: radial shells over [0, outer_factor R0].
  int verify_shells = 64;
  int verify_samples = 256;
  double outer_factor = 4.0;
};

class WitnessFailure : public Error {
 public:
  WitnessFailure(const std::string& what, Vec point, double phi)
      : Error(what), point_(std::move(point)), phi_(phi) {}
  const Vec& point() const { return point_; }
  double phi() const { return phi_; }

 private:
  Vec point_;
  double phi_;
};

/// The candidate must be polynomial. Throws WitnessFailure when phi < 1 at any
/// verification point.
WitnessC2Barra build_c2barra_witness(const LyapunovCandidate& candidate, double r0,
                                     const WitnessConfig& cfg = {});

/// C-infinity radial cutoff: 1 for |x| <= inner, 0 for |x| >= outer.
BlackBoxField smooth_cutoff(int dim, double inner, double outer);

}  // namespace ergo
