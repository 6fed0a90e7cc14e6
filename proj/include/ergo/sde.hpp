#pragma once

#include "ergo/models.hpp"
#include "ergo/rng.hpp"

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace ergo {

enum class Scheme { euler_maruyama };

inline constexpr double kBlowUpThreshold = 1e9;

struct SimConfig {
  double dt = 1e-3;
  std::uint64_t steps = 1000;
  Vec x0;
  std::uint64_t seed = 42;
  Scheme scheme = Scheme::euler_maruyama;
  std::uint64_t record_stride = 1;

  double horizon() const { return dt * static_cast<double>(steps); }
  std::size_t recorded_length() const {
    return static_cast<std::size_t>(steps / record_stride) + 1;
  }
  void validate(const DiffusionModel& model) const;
};

/// Recorded states of one sample path, row-major (count x dim).
struct Trajectory {
  std::string model_name;
  int dim = 0;
  /// Integration step.
  double dt = 0.0;
  std::uint64_t record_stride = 1;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::vector<double> states;
  bool blew_up = false;
  std::uint64_t steps_completed = 0;

  std::size_t size() const { return dim == 0 ? 0 : states.size() / static_cast<std::size_t>(dim); }
  Vec state(std::size_t k) const;
  /// Time between consecutive recorded states.
  double sample_spacing() const { return dt * static_cast<double>(record_stride); }
  double time(std::size_t k) const { return sample_spacing() * static_cast<double>(k); }
};

struct Ensemble {
  std::uint64_t seed = 0;
  SimConfig config;
  std::vector<Trajectory> paths;
  std::size_t blow_ups = 0;
  /// Non-empty when the blow-up fraction exceeds 1%.
  std::string warning;

  std::size_t size() const { return paths.size(); }
};

inline bool is_blown_up(const Vec& x) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || std::abs(x[i]) > kBlowUpThreshold) return true;
  }
  return false;
}

/// x + b(x) dt + sqrt(2 dt) sigma(x) xi, in place. Returns false on blow-up.
inline bool em_step_inplace(const DiffusionModel& model, Vec& x, double dt, const NoiseVec& xi,
                            Vec& b, Vec& s) {
  model.drift(x, b);
  model.apply_sigma(x, xi, s);
  const double scale = std::sqrt(2.0 * dt);
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] += b[i] * dt + scale * s[i];
  return !is_blown_up(x);
}

/// One Euler-Maruyama step. Throws BlowUpError on a non-finite or huge result.
Vec em_step(const DiffusionModel& model, const Vec& x, double dt, const NoiseVec& xi);

class BlowUpError : public Error {
 public:
  using Error::Error;
};

/// Drives one path and calls visit(step, x) at step 0 and after every step.
/// Returns false if the path blew up (visit is not called for the bad state).
template <class Visit>
bool drive_path(const DiffusionModel& model, const Vec& x0, double dt, std::uint64_t steps,
                std::uint64_t seed, std::uint64_t stream, Visit&& visit) {
  const NormalStream normals(seed, stream);
  const int m = model.noise_dim();
  NoiseVec xi(m);
  Vec x = x0, b(model.dim()), s(model.dim());
  visit(std::uint64_t{0}, x);
  for (std::uint64_t k = 0; k < steps; ++k) {
    normals.fill(k, m, xi);
    if (!em_step_inplace(model, x, dt, xi, b, s)) return false;
    visit(k + 1, x);
  }
  return true;
}

Trajectory simulate_path(const DiffusionModel& model, const SimConfig& cfg, std::uint64_t stream);

/// M paths on streams 0..M-1. Throws BlowUpError when more than half blow up.
Ensemble simulate_ensemble(const DiffusionModel& model, const SimConfig& cfg, std::size_t M,
                           int workers = 1);

struct WeakErrorResult {
  double error_coarse = 0.0;
  double error_fine = 0.0;
  double se_coarse = 0.0;
  double se_fine = 0.0;
  double ratio = 0.0;
  bool inconclusive = false;
  std::size_t paths = 0;
};

struct WeakErrorConfig {
  double gamma = 1.0;
  double t = 1.0;
  double dt = 0.02;
  std::size_t M = 100'000;
  Vec x0;
  std::uint64_t seed = 7;
  int workers = 1;
};

/// Weak-order probe on the OU calibration model. The bias |E X_t - e^{-gamma t} x0| at dt
/// and dt/2 is estimated against the exact OU chain driven by the same normals, whose
/// mean is known in closed form; ratio ~ 2 for a weak order-1 scheme.
WeakErrorResult weak_error_probe(const WeakErrorConfig& cfg);

/// Plain Monte Carlo error of the exact OU sampler against its analytic mean
/// (oracle self-test; should vanish within SE).
WeakErrorResult exact_sampler_error(const WeakErrorConfig& cfg);

}  // namespace ergo
