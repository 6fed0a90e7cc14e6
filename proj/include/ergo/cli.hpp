#pragma once

#include "ergo/ergodic.hpp"
#include "ergo/lyapunov.hpp"
#include "ergo/measure.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace ergo::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFail = 2;
inline constexpr int kExitInconclusive = 3;

/// Flat run description. Every field round-trips through JSON; a run is a pure
/// function of this record.
struct RunConfig {
  std::string subcommand;

  std::string model = "heisenberg";
  std::string drift = "ou:gamma=1";
  double rho = 0.0;
  std::uint64_t seed = 42;
  int workers = 1;

  // simulate
  double dt = 1e-3;
  std::uint64_t steps = 1000;
  std::uint64_t stride = 1;
  std::uint64_t stream = 0;
  std::vector<std::vector<double>> x0;

  // lyapunov
  double rmin = 6.0;
  double rmax = 60.0;
  int shells = 55;
  int samples = 512;
  std::string sampling = "low-discrepancy";
  bool find_r0 = true;

  // invariant / sweep-rho
  double T = 200.0;
  double burn = 20.0;
  std::vector<double> rhos{1.0, 0.5, 0.25, 0.1};
  std::vector<double> tail_radii{10.0};
  double residual_tol = 1e-3;
  double ks_tol = 0.05;
  double tail_tol = 0.01;
  std::string in;

  // ergodic / calibrate
  std::string f = "gauss:s=1";
  std::vector<double> deltas{0.4, 0.2, 0.1, 0.05};
  std::vector<double> times{5.0, 10.0, 20.0, 50.0};
  std::uint64_t M = 20000;
  double eps_tail = 0.1;
  double abs_tol = 0.005;
  double long_T = 20000.0;
  double long_burn = 100.0;

  // hormander
  std::vector<double> point;
  int order = 2;

  // outputs
  std::string json;
  std::string csv;
  std::string gnuplot;
  std::string out;

  bool operator==(const RunConfig&) const = default;
};

void to_json(nlohmann::json& j, const RunConfig& c);
/// Rejects unknown keys and mistyped values with ConfigError.
void from_json(const nlohmann::json& j, RunConfig& c);

/// "zero", "ou:gamma=1", "power:C=16,16,22;alpha=0;R=1".
DriftSpec parse_drift(const std::string& spec);
/// "gauss:s=1[;a=1]" or "const:c=0.5".
ScalarField parse_observable(const std::string& spec, int dim);
/// "0,0,0;2,0,0" -> two points.
std::vector<std::vector<double>> parse_points(const std::string& spec);
std::vector<double> parse_list(const std::string& spec);
Vec to_vec(const std::vector<double>& v);

DiffusionModel model_from(const RunConfig& c);

/// Result of one subcommand: the numerical payload and its exit code.
struct Outcome {
  nlohmann::json result;
  int exit_code = kExitPass;
  std::string summary;
  /// Extra tabular outputs (CSV text, gnuplot blocks) keyed by suffix.
  std::string csv;
  std::vector<std::pair<std::string, std::string>> gnuplot;
};

Outcome run_lyapunov(const RunConfig& c);
Outcome run_simulate(const RunConfig& c);
Outcome run_invariant(const RunConfig& c);
Outcome run_sweep_rho(const RunConfig& c);
Outcome run_ergodic(const RunConfig& c);
Outcome run_hormander(const RunConfig& c);
Outcome run_calibrate(const RunConfig& c);
Outcome run(const RunConfig& c);

nlohmann::json to_json(const LyapunovReport& r, std::size_t max_violations = 100);
nlohmann::json to_json(const SweepTable& t);
nlohmann::json to_json(const ErgodicReport& r);
std::string delta_sweep_csv(const DiscountedTable& t);
std::string time_sweep_csv(const LongTimeTable& t);

/// Sweep verdict: KS(m_rho, m_0) at the smallest rho <= ks_tol, KS non-increasing
/// as rho shrinks up to one null scale, and tail mass <= tail_tol on every row.
struct SweepVerdict {
  bool ks_final = false;
  bool trend = false;
  bool tails = false;
  bool pass() const { return ks_final && trend && tails; }
};
SweepVerdict judge_sweep(const SweepTable& t, double ks_tol, double tail_tol);

/// Full report document: {"config", "version", "timings", "started_at", "result", "exit_code"}.
nlohmann::json make_report(const RunConfig& c, const Outcome& o, double seconds,
                           const std::string& started_at);

/// Parses argv, runs the subcommand, writes the requested files. Never throws.
int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ergo::cli
