#pragma once

#include "ergo/calculus.hpp"
#include "ergo/lyapunov.hpp"
#include "ergo/sde.hpp"
#include "ergo/stats.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ergo {

enum class SampleSource { occupation, ensemble };

/// Weighted sample cloud. Samples are row-major (count x dim); for occupation
/// measures they are in time order.
struct EmpiricalMeasure {
  int dim = 0;
  std::vector<double> samples;
  std::vector<double> weights;
  SampleSource source = SampleSource::ensemble;
  double burn_in = 0.0;
  std::uint64_t thin = 1;

  std::size_t size() const { return weights.size(); }
  Vec point(std::size_t k) const;
  std::vector<double> coordinate(int i) const;
  /// Rescale weights to sum to one.
  void normalize();
};

/// Uniform weights over recorded states with time >= burn_in, every `thin`-th.
EmpiricalMeasure occupation_measure(const Trajectory& traj, double burn_in, std::uint64_t thin = 1);

/// Uniform weights over the M states recorded at time t (nearest recorded index).
EmpiricalMeasure ensemble_snapshot_measure(const Ensemble& ens, double t);

EmpiricalMeasure dirac_measure(const Vec& p);

/// Fixed-order weighted sum of g over the measure.
template <class G>
double integrate(const EmpiricalMeasure& m, G&& g) {
  double s = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) s += m.weights[k] * g(m.point(k));
  return s;
}

/// Integral with SE: batch means (occupation) or across-sample variance (ensemble).
Estimate integrate_with_se(const EmpiricalMeasure& m, const std::function<double(const Vec&)>& g,
                           std::size_t batches = 32);

struct MomentSummary {
  Vec mean;
  Mat cov;
  Vec mean_se;
};

MomentSummary moments(const EmpiricalMeasure& m);

struct ResidualEntry {
  std::string name;
  double residual = 0.0;
  double se = 0.0;
  bool pass = false;
};

struct ResidualReport {
  std::vector<ResidualEntry> entries;
  double abs_tol = 1e-3;
  bool all_pass() const;
};

struct NamedField {
  std::string name;
  ScalarField field;
};

/// Degree-1 and degree-2 monomials times exp(-|x|^2/(2 s^2)); 9 fields in 3-d.
std::vector<NamedField> default_dictionary(int dim, double envelope_scale = 5.0);

/// sum_k w_k (-L psi)(x_k) for each psi; pass when |residual| <= 3 SE + abs_tol.
ResidualReport adjoint_residual(const DiffusionModel& model, const EmpiricalMeasure& m,
                                const std::vector<NamedField>& dictionary, double abs_tol = 1e-3);

struct TailMassReport {
  std::vector<double> radii;
  std::vector<double> tail_mass;
  /// Present when a witness was supplied.
  std::optional<double> phi_integral;
  /// inf of phi outside each ball and the Markov bound phi_integral / that inf.
  std::vector<double> phi_floor;
  std::vector<double> markov_bound;
};

TailMassReport tail_mass(const EmpiricalMeasure& m, const std::vector<double>& radii,
                         const WitnessC2Barra* witness = nullptr,
                         const DiffusionModel* model = nullptr);

struct MeasureDistance {
  std::vector<double> ks;
  double max_ks = 0.0;
  double mean_distance = 0.0;
  double cov_distance = 0.0;
  /// Null scale of the KS statistic for these sample counts.
  double ks_scale = 0.0;
  bool low_power = false;
};

MeasureDistance compare_measures(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

/// Per-coordinate KS statistic of the measure against a reference CDF.
double ks_marginal(const EmpiricalMeasure& m, int coord, const std::function<double(double)>& cdf);

struct SweepConfig {
  Vec x0;
  double T = 200.0;
  double burn = 20.0;
  double dt = 1e-3;
  std::uint64_t record_stride = 10;
  std::uint64_t seed = 42;
  std::uint64_t stream = 0;
  std::vector<double> tail_radii{10.0};
  double residual_tol = 1e-3;
  double envelope_scale = 5.0;
  int workers = 1;
};

struct SweepRow {
  double rho = 0.0;
  std::size_t samples = 0;
  MomentSummary moments;
  ResidualReport residuals;
  MeasureDistance to_baseline;
  TailMassReport tails;
  bool blew_up = false;
};

struct SweepTable {
  std::vector<SweepRow> rows;  // first row is the rho = 0 baseline
  std::string to_csv() const;
};

/// Occupation measures for the unregularized model and each rho, all driven by
/// the same Brownian path (common random numbers).
SweepTable rho_sweep_study(const std::string& model_name, const DriftSpec& drift,
                           const std::vector<double>& rho_list, const SweepConfig& cfg);

std::string to_string(SampleSource p);

}  // namespace ergo
