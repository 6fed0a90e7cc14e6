#include "ergo/sde.hpp"

#include "ergo/parallel.hpp"

#include <cmath>
#include <numeric>

namespace ergo {

void SimConfig::validate(const DiffusionModel& model) const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be > 0");
  if (record_stride < 1) throw ConfigError("record_stride must be >= 1");
  if (x0.size() != model.dim()) {
    throw DimensionError("x0 has dimension " + std::to_string(x0.size()) + ", model '" +
                         model.name() + "' needs " + std::to_string(model.dim()));
  }
}

Vec Trajectory::state(std::size_t k) const {
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = states[k * static_cast<std::size_t>(dim) + i];
  return v;
}

Vec em_step(const DiffusionModel& model, const Vec& x, double dt, const NoiseVec& xi) {
  if (!(dt > 0.0)) throw ConfigError("em_step: dt must be > 0");
  if (x.size() != model.dim()) throw DimensionError("em_step: point dimension mismatch");
  if (xi.size() != model.noise_dim()) throw DimensionError("em_step: noise dimension mismatch");
  Vec y = x, b, s;
  if (!em_step_inplace(model, y, dt, xi, b, s)) throw BlowUpError("em_step: state blew up");
  return y;
}

Trajectory simulate_path(const DiffusionModel& model, const SimConfig& cfg, std::uint64_t stream) {
  cfg.validate(model);
  Trajectory tr;
  tr.model_name = model.name();
  tr.dim = model.dim();
  tr.dt = cfg.dt;
  tr.record_stride = cfg.record_stride;
  tr.seed = cfg.seed;
  tr.stream = stream;
  tr.states.reserve(cfg.recorded_length() * static_cast<std::size_t>(tr.dim));
  const bool ok = drive_path(model, cfg.x0, cfg.dt, cfg.steps, cfg.seed, stream,
                             [&](std::uint64_t k, const Vec& x) {
                               tr.steps_completed = k;
                               if (k % cfg.record_stride == 0) {
                                 for (int i = 0; i < tr.dim; ++i) tr.states.push_back(x[i]);
                               }
                             });
  tr.blew_up = !ok;
  return tr;
}

Ensemble simulate_ensemble(const DiffusionModel& model, const SimConfig& cfg, std::size_t M,
                           int workers) {
  if (M < 1) throw ConfigError("ensemble size must be >= 1");
  cfg.validate(model);
  Ensemble ens;
  ens.seed = cfg.seed;
  ens.config = cfg;
  ens.paths.resize(M);
  parallel_for(M, workers, [&](std::size_t i) { ens.paths[i] = simulate_path(model, cfg, i); });
  for (const auto& p : ens.paths) ens.blow_ups += p.blew_up ? 1 : 0;
  const double frac = static_cast<double>(ens.blow_ups) / static_cast<double>(M);
  if (frac > 0.5) {
    throw BlowUpError("ensemble blow-up fraction " + std::to_string(frac) + " exceeds 50%");
  }
  if (frac > 0.01) ens.warning = "blow-up fraction " + std::to_string(frac) + " exceeds 1%";
  return ens;
}

namespace {

struct MeanSe {
  Vec mean;
  Vec se;
};

MeanSe mean_se(const std::vector<Vec>& v) {
  const int n = v.front().size();
  MeanSe out{Vec::Zero(n), Vec::Zero(n)};
  for (const auto& x : v) out.mean += x;
  out.mean /= static_cast<double>(v.size());
  Vec var = Vec::Zero(n);
  for (const auto& x : v) var += (x - out.mean).cwiseAbs2();
  var /= static_cast<double>(v.size() > 1 ? v.size() - 1 : 1);
  out.se = (var / static_cast<double>(v.size())).cwiseSqrt();
  return out;
}

// Endpoint difference (EM - exact chain) for one path at step size dt.
Vec coupled_difference(const WeakErrorConfig& cfg, double dt, std::uint64_t stream) {
  const DiffusionModel model = build_ou_identity(cfg.gamma, static_cast<int>(cfg.x0.size()));
  const auto steps = static_cast<std::uint64_t>(std::llround(cfg.t / dt));
  const NormalStream normals(cfg.seed, stream);
  const int n = model.dim();
  NoiseVec xi(n);
  Vec em = cfg.x0, ex = cfg.x0, b(n), s(n);
  const double decay = std::exp(-cfg.gamma * dt);
  const double sd = std::sqrt(-std::expm1(-2.0 * cfg.gamma * dt) / cfg.gamma);
  for (std::uint64_t k = 0; k < steps; ++k) {
    normals.fill(k, n, xi);
    em_step_inplace(model, em, dt, xi, b, s);
    for (int i = 0; i < n; ++i) ex[i] = decay * ex[i] + sd * xi[i];
  }
  return em - ex;
}

void check_probe(const WeakErrorConfig& cfg) {
  if (!(cfg.gamma > 0.0) || !(cfg.t > 0.0) || !(cfg.dt > 0.0)) {
    throw ConfigError("weak_error_probe needs gamma, t, dt > 0");
  }
  if (cfg.M < 2) throw ConfigError("weak_error_probe needs M >= 2");
  if (cfg.x0.size() < 1) throw ConfigError("weak_error_probe needs x0");
}

}  // namespace

WeakErrorResult weak_error_probe(const WeakErrorConfig& cfg) {
  check_probe(cfg);
  std::vector<Vec> coarse(cfg.M), fine(cfg.M);
  parallel_for(cfg.M, cfg.workers, [&](std::size_t i) {
    coarse[i] = coupled_difference(cfg, cfg.dt, i);
    fine[i] = coupled_difference(cfg, 0.5 * cfg.dt, i);
  });
  const MeanSe c = mean_se(coarse);
  const MeanSe f = mean_se(fine);
  WeakErrorResult out;
  out.paths = cfg.M;
  out.error_coarse = c.mean.norm();
  out.error_fine = f.mean.norm();
  out.se_coarse = c.se.norm();
  out.se_fine = f.se.norm();
  out.ratio = out.error_fine > 0.0 ? out.error_coarse / out.error_fine : 0.0;
  out.inconclusive = out.error_coarse < 3.0 * out.se_coarse || out.error_fine < 3.0 * out.se_fine;
  return out;
}

WeakErrorResult exact_sampler_error(const WeakErrorConfig& cfg) {
  check_probe(cfg);
  const int n = static_cast<int>(cfg.x0.size());
  std::vector<Vec> ends(cfg.M);
  parallel_for(cfg.M, cfg.workers, [&](std::size_t i) {
    const NormalStream normals(cfg.seed, i);
    NoiseVec xi(n);
    normals.fill(0, n, xi);
    ends[i] = exact_ou_transition(cfg.x0, cfg.gamma, cfg.t, Vec(xi.head(n)));
  });
  const MeanSe m = mean_se(ends);
  WeakErrorResult out;
  out.paths = cfg.M;
  out.error_coarse = (m.mean - std::exp(-cfg.gamma * cfg.t) * cfg.x0).norm();
  out.se_coarse = m.se.norm();
  out.error_fine = out.error_coarse;
  out.se_fine = out.se_coarse;
  out.ratio = 1.0;
  out.inconclusive = out.error_coarse < 3.0 * out.se_coarse;
  return out;
}

}  // namespace ergo
