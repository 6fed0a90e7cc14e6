#pragma once

#include "ergo/fields.hpp"
#include "ergo/measure.hpp"
#include "ergo/models.hpp"
#include "ergo/stats.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ergo {

/// Per-path samples of the discounted, Cauchy and integrated functionals of f
/// along paths started at one x0. Streams 0..M-1 of `seed`, so two calls with the
/// same seed use common random numbers.
struct PathFunctionals {
  std::vector<double> deltas;
  std::vector<double> times;
  /// Discount horizon per delta.
  std::vector<double> horizons;
  std::size_t paths = 0;
  /// delta * (discounted integral) per path, row-major (paths x deltas).
  std::vector<double> delta_u;
  /// f(X_t) per path (paths x times).
  std::vector<double> f_at;
  /// (1/t) int_0^t f(X_s) ds per path (paths x times); f(x0) at t = 0.
  std::vector<double> v_over_t;
  /// Paths excluded after a blow-up.
  std::size_t blow_ups = 0;
  /// Pathwise |u_delta| <= sup|f|/delta and |u(t)| <= sup|f| failures.
  std::size_t discount_bound_violations = 0;
  std::size_t cauchy_bound_violations = 0;
  double f_sup = 0.0;

  double blow_up_fraction() const {
    return static_cast<double>(blow_ups) / static_cast<double>(paths + blow_ups);
  }
  std::vector<double> column_delta(std::size_t j) const;
  std::vector<double> column_f(std::size_t j) const;
  std::vector<double> column_v(std::size_t j) const;
};

struct PathFunctionalConfig {
  std::vector<double> deltas;
  std::vector<double> times;
  std::size_t M = 1000;
  double dt = 1e-3;
  std::uint64_t seed = 42;
  /// Horizon T(delta) satisfies 2 sup|f| e^{-delta T} / delta <= eps_tail.
  double eps_tail = 0.1;
  /// Overrides the certified bound from sup_abs_bound (needed for opaque fields).
  std::optional<double> f_sup;
  int workers = 1;
};

/// Discount horizon for one delta.
double discount_horizon(double delta, double f_sup, double eps_tail);

/// Discounted integrals use the exponentially fitted trapezoid rule (exact integral
/// of e^{-delta t} against the piecewise-linear interpolant of f) and close the tail
/// with f(X_T) e^{-delta T} / delta; the weights sum to 1/delta exactly.
PathFunctionals sample_path_functionals(const DiffusionModel& model, const ScalarField& f,
                                        const Vec& x0, const PathFunctionalConfig& cfg);

/// Every start point in lockstep on shared normals (one draw per path and step).
/// A path that blows up from any start is dropped for all starts.
std::vector<PathFunctionals> sample_path_functionals(const DiffusionModel& model, const ScalarField& f,
                                                     const std::vector<Vec>& x0s,
                                                     const PathFunctionalConfig& cfg);

struct EstimatorOptions {
  std::size_t M = 1000;
  double dt = 1e-3;
  std::uint64_t seed = 42;
  double eps_tail = 0.1;
  std::optional<double> f_sup;
  int workers = 1;
};

/// u_delta(x0) = E int_0^inf f(X_t) e^{-delta t} dt, with SE across paths.
Estimate u_delta(const DiffusionModel& model, const ScalarField& f, const Vec& x0, double delta,
                 const EstimatorOptions& opt);

/// u(t, x0) = E f(X_t).
Estimate u_cauchy(const DiffusionModel& model, const ScalarField& f, const Vec& x0, double t,
                  const EstimatorOptions& opt);

struct DiscountedConfig {
  std::vector<double> deltas;  // descending
  std::vector<Vec> x0s;
  EstimatorOptions options;
  /// Extrapolations whose SE exceeds this are flagged inconclusive.
  double max_extrapolation_se = 0.05;
};

struct DiscountedRow {
  double delta = 0.0;
  std::size_t x0_index = 0;
  double lambda_hat = 0.0;
  double se = 0.0;
};

struct DiscountedTable {
  std::vector<DiscountedRow> rows;
  /// Affine-in-delta extrapolation to delta = 0 from the two smallest deltas, per x0.
  std::vector<Estimate> extrapolated;
  bool inconclusive = false;
  std::vector<PathFunctionals> samples;  // per x0
};

DiscountedTable lambda_discounted(const DiffusionModel& model, const ScalarField& f,
                                  const DiscountedConfig& cfg);

struct CauchyConfig {
  std::vector<double> times;  // increasing
  std::vector<Vec> x0s;
  EstimatorOptions options;
};

struct LongTimeRow {
  double t = 0.0;
  std::size_t x0_index = 0;
  double u_hat = 0.0;
  double u_se = 0.0;
  double v_over_t = 0.0;
  double v_se = 0.0;
};

struct LongTimeTable {
  std::vector<LongTimeRow> rows;
  std::vector<PathFunctionals> samples;
  bool inconclusive = false;
};

LongTimeTable lambda_longtime(const DiffusionModel& model, const ScalarField& f,
                              const CauchyConfig& cfg);

struct TimeAverageConfig {
  Vec x0;
  double T = 500.0;
  double burn = 50.0;
  double dt = 1e-3;
  std::uint64_t record_stride = 10;
  std::uint64_t seed = 42;
  std::uint64_t stream = 0;
  std::size_t batches = 32;
};

struct TimeAverageResult {
  Estimate estimate;
  std::size_t samples = 0;
  bool blew_up = false;
};

/// Mean of f over the post-burn-in recorded states of one path, with batch-means SE.
/// Identical, bit for bit, to integrating f against that path's occupation measure.
TimeAverageResult lambda_time_average(const DiffusionModel& model, const ScalarField& f,
                                      const TimeAverageConfig& cfg);

struct SpreadLevel {
  double level = 0.0;  // delta or t
  double spread = 0.0;
  double combined_se = 0.0;
  std::size_t argmax = 0;
  std::size_t argmin = 0;
  bool pass = false;
};

struct SpreadReport {
  std::vector<SpreadLevel> levels;
  double abs_tol = 0.005;
  /// Spreads shrink along the sweep, up to 3 combined SE per step, and the last is
  /// strictly below the first unless every level is within tolerance.
  bool decreasing = false;
  bool final_pass = false;
  bool pass() const { return decreasing && final_pass; }
};

/// Spread of paired per-path samples across starting points at each level.
/// samples[level][x0] holds per-path values (same paths for every x0).
SpreadReport constancy_diagnostic(const std::vector<double>& levels,
                                  const std::vector<std::vector<std::vector<double>>>& samples,
                                  double abs_tol = 0.005);

/// Unpaired variant from (value, SE) estimates: combined SE = sqrt(se_a^2 + se_b^2).
SpreadReport constancy_diagnostic(const std::vector<double>& levels,
                                  const std::vector<std::vector<Estimate>>& estimates,
                                  double abs_tol = 0.005);

enum class Verdict { pass, fail, inconclusive };
std::string to_string(Verdict v);

struct ErgodicConfig {
  std::vector<Vec> x0s;
  std::vector<double> deltas{0.4, 0.2, 0.1, 0.05};
  std::vector<double> times{5.0, 10.0, 20.0, 50.0};
  EstimatorOptions options;
  /// Long single-path runs for the time average and the occupation estimate of m.
  double time_average_T = 20000.0;
  double time_average_burn = 100.0;
  double invariant_T = 20000.0;
  double invariant_burn = 100.0;
  std::uint64_t record_stride = 10;
  double abs_tol = 0.005;
  double max_extrapolation_se = 0.05;
};

struct Comparison {
  std::string a;
  std::string b;
  double difference = 0.0;
  double combined_se = 0.0;
  bool pass = false;
};

struct ErgodicReport {
  Estimate lambda_invariant;
  DiscountedTable discounted;
  LongTimeTable longtime;
  Estimate lambda_time_average;
  /// u(t_max, x0s[0]) and the discounted extrapolation at x0s[0].
  Estimate lambda_cauchy;
  Estimate lambda_discounted;
  SpreadReport delta_spread;
  SpreadReport time_spread;
  std::vector<Comparison> comparisons;
  Verdict verdict = Verdict::inconclusive;
  std::vector<std::string> notes;
};

/// Stream offset used for the two long single-path runs.
inline constexpr std::uint64_t kLongRunStream = std::uint64_t{1} << 40;

ErgodicReport cross_estimator_report(const DiffusionModel& model, const ScalarField& f,
                                     const ErgodicConfig& cfg);

}  // namespace ergo
