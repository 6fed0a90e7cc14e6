#include "ergo/ergodic.hpp"

#include "ergo/parallel.hpp"
#include "ergo/rng.hpp"
#include "ergo/sde.hpp"

#include <algorithm>
#include <cmath>

namespace ergo {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass:
      return "pass";
    case Verdict::fail:
      return "fail";
    case Verdict::inconclusive:
      return "inconclusive";
  }
  return "unknown";
}

namespace {

std::vector<double> column(const std::vector<double>& data, std::size_t rows, std::size_t cols,
                           std::size_t j) {
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) out[r] = data[r * cols + j];
  return out;
}

double resolve_sup(const ScalarField& f, const std::optional<double>& override_sup) {
  if (override_sup) {
    if (!(*override_sup >= 0.0)) throw ConfigError("f_sup must be >= 0");
    return *override_sup;
  }
  const auto s = sup_abs_bound(f);
  if (!s) {
    throw ConfigError("observable must be bounded: use an enveloped field or supply f_sup");
  }
  return *s;
}

// Exact weights of f_k and f_{k+1} in int_0^h e^{-delta s} (linear interpolant) ds.
struct FittedWeights {
  double left = 0.0;
  double right = 0.0;
};

FittedWeights fitted_weights(double delta, double h) {
  const double x = delta * h;
  const double e0 = -std::expm1(-x) / delta;  // int_0^h e^{-delta s} ds
  double m1;                                  // int_0^h s e^{-delta s} ds / h
  if (x < 1e-3) {
    // h * (1/2 - x/3 + x^2/8 - x^3/30)
    m1 = h * (0.5 - x / 3.0 + x * x / 8.0 - x * x * x / 30.0);
  } else {
    m1 = (-std::expm1(-x) - x * std::exp(-x)) / (delta * delta * h);
  }
  return {e0 - m1, m1};
}

}  // namespace

std::vector<double> PathFunctionals::column_delta(std::size_t j) const {
  return column(delta_u, paths, deltas.size(), j);
}
std::vector<double> PathFunctionals::column_f(std::size_t j) const {
  return column(f_at, paths, times.size(), j);
}
std::vector<double> PathFunctionals::column_v(std::size_t j) const {
  return column(v_over_t, paths, times.size(), j);
}

double discount_horizon(double delta, double f_sup, double eps_tail) {
  if (!(delta > 0.0)) throw ConfigError("discount factor delta must be > 0");
  if (!(eps_tail > 0.0)) throw ConfigError("eps_tail must be > 0");
  if (f_sup <= 0.0) return 0.0;
  return std::max(0.0, std::log(2.0 * f_sup / (delta * eps_tail)) / delta);
}

namespace {

// Drives every start point of one path in lockstep from the same normals. A path
// that blows up from any start is dropped for all of them so samples stay paired.
std::vector<PathFunctionals> sample_multi(const DiffusionModel& model, const ScalarField& f,
                                          const std::vector<Vec>& x0s, const PathFunctionalConfig& cfg) {
  if (x0s.empty()) throw ConfigError("at least one starting point is required");
  for (const Vec& x0 : x0s) {
    if (x0.size() != model.dim()) throw DimensionError("start point and model dimensions must agree");
  }
  if (field_dim(f) != model.dim()) throw DimensionError("observable and model dimensions must agree");
  if (!(cfg.dt > 0.0)) throw ConfigError("dt must be > 0");
  if (cfg.M < 1) throw ConfigError("M must be >= 1");
  for (double d : cfg.deltas) {
    if (!(d > 0.0)) throw ConfigError("discount factors must be > 0");
  }
  for (double t : cfg.times) {
    if (!(t >= 0.0)) throw ConfigError("Cauchy times must be >= 0");
  }
  const double sup = resolve_sup(f, cfg.f_sup);
  const std::size_t nx = x0s.size();
  const std::size_t nd = cfg.deltas.size();
  const std::size_t nt = cfg.times.size();

  PathFunctionals proto;
  proto.deltas = cfg.deltas;
  proto.times = cfg.times;
  proto.f_sup = sup;
  std::vector<std::uint64_t> dsteps(nd), tsteps(nt);
  std::vector<FittedWeights> weights(nd);
  std::vector<double> decay(nd);
  std::uint64_t total = 0;
  for (std::size_t j = 0; j < nd; ++j) {
    const double T = discount_horizon(cfg.deltas[j], sup, cfg.eps_tail);
    dsteps[j] = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(T / cfg.dt - 1e-9)));
    proto.horizons.push_back(static_cast<double>(dsteps[j]) * cfg.dt);
    weights[j] = fitted_weights(cfg.deltas[j], cfg.dt);
    decay[j] = std::exp(-cfg.deltas[j] * cfg.dt);
    total = std::max(total, dsteps[j]);
  }
  for (std::size_t j = 0; j < nt; ++j) {
    tsteps[j] = static_cast<std::uint64_t>(std::llround(cfg.times[j] / cfg.dt));
    total = std::max(total, tsteps[j]);
  }

  struct PerPath {
    std::vector<double> du, fa, va;  // (x0 x level)
    std::vector<char> blew;
    std::vector<std::size_t> dviol, cviol;
  };
  std::vector<PerPath> per(cfg.M);
  const double slack = 1e-12 * std::max(1.0, sup);
  const int m = model.noise_dim();

  parallel_for(cfg.M, cfg.workers, [&](std::size_t p) {
    PerPath& r = per[p];
    r.du.assign(nx * nd, 0.0);
    r.fa.assign(nx * nt, 0.0);
    r.va.assign(nx * nt, 0.0);
    r.blew.assign(nx, 0);
    r.dviol.assign(nx, 0);
    r.cviol.assign(nx, 0);
    std::vector<Vec> xs = x0s;
    std::vector<double> acc(nx * nd, 0.0), disc(nx * nd, 1.0), f_prev(nx), integral(nx, 0.0);
    const NormalStream normals(cfg.seed, p);
    NoiseVec xi(m);
    Vec b(model.dim()), s(model.dim());

    auto visit = [&](std::size_t i, std::uint64_t k, double fx) {
      if (k > 0) {
        integral[i] += 0.5 * cfg.dt * (f_prev[i] + fx);
        for (std::size_t j = 0; j < nd; ++j) {
          if (k > dsteps[j]) continue;
          const std::size_t ij = i * nd + j;
          acc[ij] += disc[ij] * (weights[j].left * f_prev[i] + weights[j].right * fx);
          disc[ij] *= decay[j];
          if (k == dsteps[j]) r.du[ij] = cfg.deltas[j] * acc[ij] + disc[ij] * fx;
        }
      }
      for (std::size_t j = 0; j < nt; ++j) {
        if (k != tsteps[j]) continue;
        r.fa[i * nt + j] = fx;
        r.va[i * nt + j] = k == 0 ? fx : integral[i] / (static_cast<double>(k) * cfg.dt);
      }
      f_prev[i] = fx;
    };

    for (std::size_t i = 0; i < nx; ++i) visit(i, 0, field_value(f, xs[i]));
    for (std::uint64_t k = 0; k < total; ++k) {
      normals.fill(k, m, xi);
      for (std::size_t i = 0; i < nx; ++i) {
        if (r.blew[i]) continue;
        if (!em_step_inplace(model, xs[i], cfg.dt, xi, b, s)) {
          r.blew[i] = 1;
          continue;
        }
        visit(i, k + 1, field_value(f, xs[i]));
      }
    }
    for (std::size_t i = 0; i < nx; ++i) {
      for (std::size_t j = 0; j < nd; ++j)
        if (std::abs(r.du[i * nd + j]) > sup + slack) ++r.dviol[i];
      for (std::size_t j = 0; j < nt; ++j)
        if (std::abs(r.fa[i * nt + j]) > sup + slack) ++r.cviol[i];
    }
  });

  std::vector<PathFunctionals> out(nx, proto);
  for (const auto& r : per) {
    const bool any = std::any_of(r.blew.begin(), r.blew.end(), [](char c) { return c != 0; });
    for (std::size_t i = 0; i < nx; ++i) {
      PathFunctionals& o = out[i];
      if (any) {
        ++o.blow_ups;
        continue;
      }
      ++o.paths;
      o.delta_u.insert(o.delta_u.end(), r.du.begin() + static_cast<std::ptrdiff_t>(i * nd),
                       r.du.begin() + static_cast<std::ptrdiff_t>((i + 1) * nd));
      o.f_at.insert(o.f_at.end(), r.fa.begin() + static_cast<std::ptrdiff_t>(i * nt),
                    r.fa.begin() + static_cast<std::ptrdiff_t>((i + 1) * nt));
      o.v_over_t.insert(o.v_over_t.end(), r.va.begin() + static_cast<std::ptrdiff_t>(i * nt),
                        r.va.begin() + static_cast<std::ptrdiff_t>((i + 1) * nt));
      o.discount_bound_violations += r.dviol[i];
      o.cauchy_bound_violations += r.cviol[i];
    }
  }
  if (out.front().paths == 0) throw BlowUpError("every path blew up");
  return out;
}

}  // namespace

PathFunctionals sample_path_functionals(const DiffusionModel& model, const ScalarField& f,
                                        const Vec& x0, const PathFunctionalConfig& cfg) {
  return sample_multi(model, f, {x0}, cfg).front();
}

std::vector<PathFunctionals> sample_path_functionals(const DiffusionModel& model, const ScalarField& f,
                                                     const std::vector<Vec>& x0s,
                                                     const PathFunctionalConfig& cfg) {
  return sample_multi(model, f, x0s, cfg);
}

namespace {

PathFunctionalConfig to_pf(const EstimatorOptions& o, std::vector<double> deltas,
                           std::vector<double> times) {
  PathFunctionalConfig c;
  c.deltas = std::move(deltas);
  c.times = std::move(times);
  c.M = o.M;
  c.dt = o.dt;
  c.seed = o.seed;
  c.eps_tail = o.eps_tail;
  c.f_sup = o.f_sup;
  c.workers = o.workers;
  return c;
}

}  // namespace

Estimate u_delta(const DiffusionModel& model, const ScalarField& f, const Vec& x0, double delta,
                 const EstimatorOptions& opt) {
  const PathFunctionals pf = sample_path_functionals(model, f, x0, to_pf(opt, {delta}, {}));
  Estimate e = mean_and_se(pf.column_delta(0));
  e.value /= delta;
  e.se /= delta;
  return e;
}

Estimate u_cauchy(const DiffusionModel& model, const ScalarField& f, const Vec& x0, double t,
                  const EstimatorOptions& opt) {
  const PathFunctionals pf = sample_path_functionals(model, f, x0, to_pf(opt, {}, {t}));
  return mean_and_se(pf.column_f(0));
}

namespace {

// Affine extrapolation to delta = 0 through the two smallest deltas, per path.
Estimate extrapolate(const PathFunctionals& pf) {
  const std::size_t nd = pf.deltas.size();
  if (nd == 1) return mean_and_se(pf.column_delta(0));
  std::size_t a = 0, b = 1;  // a: smallest, b: second smallest
  if (pf.deltas[b] < pf.deltas[a]) std::swap(a, b);
  for (std::size_t j = 2; j < nd; ++j) {
    if (pf.deltas[j] < pf.deltas[a]) {
      b = a;
      a = j;
    } else if (pf.deltas[j] < pf.deltas[b]) {
      b = j;
    }
  }
  const double da = pf.deltas[a], db = pf.deltas[b];
  std::vector<double> ext(pf.paths);
  for (std::size_t p = 0; p < pf.paths; ++p) {
    const double va = pf.delta_u[p * nd + a], vb = pf.delta_u[p * nd + b];
    ext[p] = (db * va - da * vb) / (db - da);
  }
  return mean_and_se(ext);
}

void check_x0s(const std::vector<Vec>& x0s) {
  if (x0s.empty()) throw ConfigError("at least one starting point is required");
}

}  // namespace

DiscountedTable lambda_discounted(const DiffusionModel& model, const ScalarField& f,
                                  const DiscountedConfig& cfg) {
  check_x0s(cfg.x0s);
  if (cfg.deltas.empty()) throw ConfigError("delta list is empty");
  for (std::size_t i = 0; i < cfg.deltas.size(); ++i) {
    if (!(cfg.deltas[i] > 0.0)) throw ConfigError("deltas must be positive");
    if (i > 0 && !(cfg.deltas[i] < cfg.deltas[i - 1])) throw ConfigError("deltas must be descending");
  }
  DiscountedTable table;
  auto all = sample_multi(model, f, cfg.x0s, to_pf(cfg.options, cfg.deltas, {}));
  for (std::size_t xi = 0; xi < cfg.x0s.size(); ++xi) {
    PathFunctionals& pf = all[xi];
    for (std::size_t j = 0; j < cfg.deltas.size(); ++j) {
      const Estimate e = mean_and_se(pf.column_delta(j));
      table.rows.push_back({cfg.deltas[j], xi, e.value, e.se});
    }
    const Estimate ext = extrapolate(pf);
    table.extrapolated.push_back(ext);
    if (ext.se > cfg.max_extrapolation_se || pf.blow_up_fraction() > 0.01) table.inconclusive = true;
    table.samples.push_back(std::move(pf));
  }
  return table;
}

LongTimeTable lambda_longtime(const DiffusionModel& model, const ScalarField& f,
                              const CauchyConfig& cfg) {
  check_x0s(cfg.x0s);
  for (std::size_t i = 1; i < cfg.times.size(); ++i) {
    if (!(cfg.times[i] > cfg.times[i - 1])) throw ConfigError("times must be increasing");
  }
  LongTimeTable table;
  auto all = sample_multi(model, f, cfg.x0s, to_pf(cfg.options, {}, cfg.times));
  for (std::size_t xi = 0; xi < cfg.x0s.size(); ++xi) {
    PathFunctionals& pf = all[xi];
    for (std::size_t j = 0; j < cfg.times.size(); ++j) {
      const Estimate u = mean_and_se(pf.column_f(j));
      const Estimate v = mean_and_se(pf.column_v(j));
      table.rows.push_back({cfg.times[j], xi, u.value, u.se, v.value, v.se});
    }
    if (pf.blow_up_fraction() > 0.01) table.inconclusive = true;
    table.samples.push_back(std::move(pf));
  }
  return table;
}

TimeAverageResult lambda_time_average(const DiffusionModel& model, const ScalarField& f,
                                      const TimeAverageConfig& cfg) {
  if (!(cfg.T > cfg.burn) || cfg.burn < 0.0) throw ConfigError("time average needs 0 <= burn < T");
  SimConfig sim;
  sim.dt = cfg.dt;
  sim.steps = static_cast<std::uint64_t>(std::llround(cfg.T / cfg.dt));
  sim.x0 = cfg.x0;
  sim.seed = cfg.seed;
  sim.record_stride = cfg.record_stride;
  const Trajectory tr = simulate_path(model, sim, cfg.stream);
  const EmpiricalMeasure m = occupation_measure(tr, cfg.burn, 1);
  TimeAverageResult out;
  out.estimate = integrate_with_se(m, [&](const Vec& x) { return field_value(f, x); }, cfg.batches);
  out.samples = m.size();
  out.blew_up = tr.blew_up;
  return out;
}

namespace {

SpreadReport finish_spread(SpreadReport rep) {
  if (rep.levels.empty()) return rep;
  rep.decreasing = true;
  for (std::size_t l = 1; l < rep.levels.size(); ++l) {
    const auto& prev = rep.levels[l - 1];
    const auto& cur = rep.levels[l];
    const double noise = 3.0 * std::hypot(prev.combined_se, cur.combined_se);
    if (cur.spread > prev.spread + noise) rep.decreasing = false;
  }
  // Strict overall decrease is only demanded when some level is outside tolerance;
  // a sweep that is flat at zero (constant f) is already constant.
  const bool all_pass = std::all_of(rep.levels.begin(), rep.levels.end(),
                                    [](const SpreadLevel& s) { return s.pass; });
  if (rep.levels.size() > 1 && !all_pass && !(rep.levels.back().spread < rep.levels.front().spread)) {
    rep.decreasing = false;
  }
  if (rep.levels.size() == 1) rep.decreasing = true;
  rep.final_pass = rep.levels.back().pass;
  return rep;
}

}  // namespace

SpreadReport constancy_diagnostic(const std::vector<double>& levels,
                                  const std::vector<std::vector<std::vector<double>>>& samples,
                                  double abs_tol) {
  if (levels.size() != samples.size()) throw DimensionError("levels and samples differ in length");
  SpreadReport rep;
  rep.abs_tol = abs_tol;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const auto& per_x0 = samples[l];
    SpreadLevel s;
    s.level = levels[l];
    if (per_x0.empty()) throw ConfigError("constancy diagnostic needs at least one starting point");
    std::vector<double> means;
    for (const auto& v : per_x0) means.push_back(mean_and_se(v).value);
    s.argmax = static_cast<std::size_t>(std::max_element(means.begin(), means.end()) - means.begin());
    s.argmin = static_cast<std::size_t>(std::min_element(means.begin(), means.end()) - means.begin());
    s.spread = means[s.argmax] - means[s.argmin];
    if (s.argmax != s.argmin) {
      const auto& a = per_x0[s.argmax];
      const auto& b = per_x0[s.argmin];
      if (a.size() != b.size()) throw DimensionError("paired samples differ in length");
      std::vector<double> d(a.size());
      for (std::size_t p = 0; p < a.size(); ++p) d[p] = a[p] - b[p];
      s.combined_se = mean_and_se(d).se;
    }
    s.pass = s.spread <= 3.0 * s.combined_se + abs_tol;
    rep.levels.push_back(s);
  }
  return finish_spread(std::move(rep));
}

SpreadReport constancy_diagnostic(const std::vector<double>& levels,
                                  const std::vector<std::vector<Estimate>>& estimates,
                                  double abs_tol) {
  if (levels.size() != estimates.size()) throw DimensionError("levels and estimates differ in length");
  SpreadReport rep;
  rep.abs_tol = abs_tol;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const auto& e = estimates[l];
    if (e.empty()) throw ConfigError("constancy diagnostic needs at least one starting point");
    SpreadLevel s;
    s.level = levels[l];
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (e[i].value > e[s.argmax].value) s.argmax = i;
      if (e[i].value < e[s.argmin].value) s.argmin = i;
    }
    s.spread = e[s.argmax].value - e[s.argmin].value;
    if (s.argmax != s.argmin) s.combined_se = std::hypot(e[s.argmax].se, e[s.argmin].se);
    s.pass = s.spread <= 3.0 * s.combined_se + abs_tol;
    rep.levels.push_back(s);
  }
  return finish_spread(std::move(rep));
}

ErgodicReport cross_estimator_report(const DiffusionModel& model, const ScalarField& f,
                                     const ErgodicConfig& cfg) {
  check_x0s(cfg.x0s);
  if (cfg.times.empty() || cfg.deltas.empty()) throw ConfigError("need at least one delta and one time");
  ErgodicReport rep;

  // One pass per x0 covers every delta and every t; the same streams for every x0.
  DiscountedTable dt;
  LongTimeTable lt;
  for (std::size_t i = 1; i < cfg.deltas.size(); ++i) {
    if (!(cfg.deltas[i] < cfg.deltas[i - 1])) throw ConfigError("deltas must be descending");
  }
  for (std::size_t i = 1; i < cfg.times.size(); ++i) {
    if (!(cfg.times[i] > cfg.times[i - 1])) throw ConfigError("times must be increasing");
  }
  auto all = sample_multi(model, f, cfg.x0s, to_pf(cfg.options, cfg.deltas, cfg.times));
  for (std::size_t xi = 0; xi < cfg.x0s.size(); ++xi) {
    PathFunctionals& pf = all[xi];
    for (std::size_t j = 0; j < cfg.deltas.size(); ++j) {
      const Estimate e = mean_and_se(pf.column_delta(j));
      dt.rows.push_back({cfg.deltas[j], xi, e.value, e.se});
    }
    const Estimate ext = extrapolate(pf);
    dt.extrapolated.push_back(ext);
    if (ext.se > cfg.max_extrapolation_se) dt.inconclusive = true;
    for (std::size_t j = 0; j < cfg.times.size(); ++j) {
      const Estimate u = mean_and_se(pf.column_f(j));
      const Estimate v = mean_and_se(pf.column_v(j));
      lt.rows.push_back({cfg.times[j], xi, u.value, u.se, v.value, v.se});
    }
    if (pf.blow_up_fraction() > 0.01) {
      dt.inconclusive = lt.inconclusive = true;
      rep.notes.push_back("blow-up fraction above 1% at x0 index " + std::to_string(xi));
    }
    if (pf.discount_bound_violations || pf.cauchy_bound_violations) {
      rep.notes.push_back("pathwise bound violated at x0 index " + std::to_string(xi));
    }
    dt.samples.push_back(pf);
    lt.samples.push_back(std::move(pf));
  }

  // Constancy across x0, paired by path.
  {
    std::vector<std::vector<std::vector<double>>> ds(cfg.deltas.size()), ts(cfg.times.size());
    for (std::size_t j = 0; j < cfg.deltas.size(); ++j)
      for (const auto& pf : dt.samples) ds[j].push_back(pf.column_delta(j));
    for (std::size_t j = 0; j < cfg.times.size(); ++j)
      for (const auto& pf : lt.samples) ts[j].push_back(pf.column_f(j));
    rep.delta_spread = constancy_diagnostic(cfg.deltas, ds, cfg.abs_tol);
    rep.time_spread = constancy_diagnostic(cfg.times, ts, cfg.abs_tol);
  }

  TimeAverageConfig ta;
  ta.x0 = cfg.x0s.front();
  ta.T = cfg.time_average_T;
  ta.burn = cfg.time_average_burn;
  ta.dt = cfg.options.dt;
  ta.record_stride = cfg.record_stride;
  ta.seed = cfg.options.seed;
  ta.stream = kLongRunStream;
  const TimeAverageResult tar = lambda_time_average(model, f, ta);
  rep.lambda_time_average = tar.estimate;

  // Independent long run (origin start, its own stream) for int f dm.
  TimeAverageConfig inv = ta;
  inv.x0 = Vec::Zero(model.dim());
  inv.T = cfg.invariant_T;
  inv.burn = cfg.invariant_burn;
  inv.stream = kLongRunStream + 1;
  const TimeAverageResult invr = lambda_time_average(model, f, inv);
  rep.lambda_invariant = invr.estimate;
  if (tar.blew_up || invr.blew_up) rep.notes.push_back("long run blew up");

  rep.lambda_discounted = dt.extrapolated.front();
  {
    const std::size_t j = cfg.times.size() - 1;
    const auto& r = lt.rows[j];  // x0 index 0 rows come first
    rep.lambda_cauchy = {r.u_hat, r.u_se};
  }

  const std::vector<std::pair<std::string, Estimate>> named{
      {"invariant", rep.lambda_invariant},
      {"discounted", rep.lambda_discounted},
      {"cauchy", rep.lambda_cauchy},
      {"time_average", rep.lambda_time_average}};
  bool all_pass = true;
  for (std::size_t a = 0; a < named.size(); ++a) {
    for (std::size_t b = a + 1; b < named.size(); ++b) {
      Comparison c;
      c.a = named[a].first;
      c.b = named[b].first;
      c.difference = named[a].second.value - named[b].second.value;
      c.combined_se = std::hypot(named[a].second.se, named[b].second.se);
      c.pass = std::abs(c.difference) <= 3.0 * c.combined_se + cfg.abs_tol;
      all_pass = all_pass && c.pass;
      rep.comparisons.push_back(c);
    }
  }
  const bool inconclusive = dt.inconclusive || lt.inconclusive || tar.blew_up || invr.blew_up;
  rep.verdict = inconclusive ? Verdict::inconclusive : (all_pass ? Verdict::pass : Verdict::fail);
  rep.discounted = std::move(dt);
  rep.longtime = std::move(lt);
  return rep;
}

}  // namespace ergo
