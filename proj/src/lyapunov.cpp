#include "ergo/lyapunov.hpp"

#include "ergo/parallel.hpp"
#include "ergo/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace ergo {

void ShellScanConfig::validate() const {
  if (!(r_min > 0.0) || !(r_max > r_min)) throw ConfigError("shell scan needs 0 < r_min < r_max");
  if (shells < 1 || samples_per_shell < 1) throw ConfigError("shell scan counts must be >= 1");
}

double ShellScanConfig::radius(int i) const {
  if (shells == 1) return r_min;
  return r_min + (r_max - r_min) * static_cast<double>(i) / static_cast<double>(shells - 1);
}

namespace {

double radical_inverse(std::uint64_t k, std::uint64_t base) {
  double inv = 1.0 / static_cast<double>(base);
  double f = inv;
  double out = 0.0;
  while (k > 0) {
    out += f * static_cast<double>(k % base);
    k /= base;
    f *= inv;
  }
  return out;
}

constexpr std::uint64_t kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

}  // namespace

std::vector<Vec> sphere_points(int dim, double r, int count, SphereSampling sampling) {
  if (dim < 1 || dim > kMaxDim) throw DimensionError("sphere_points: bad dimension");
  if (count < 1) throw ConfigError("sphere_points: count must be >= 1");
  std::vector<Vec> out;
  const double two_pi = 2.0 * std::numbers::pi;
  if (dim == 1) {
    out.push_back(make_vec({-r}));
    out.push_back(make_vec({r}));
    return out;
  }
  out.reserve(static_cast<std::size_t>(count));
  if (dim == 2) {
    for (int k = 0; k < count; ++k) {
      const double th = two_pi * (k + 0.5) / count;
      out.push_back(make_vec({r * std::cos(th), r * std::sin(th)}));
    }
    return out;
  }
  if (dim == 3) {
    if (sampling == SphereSampling::low_discrepancy) {
      // Fibonacci lattice.
      const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
      for (int k = 0; k < count; ++k) {
        const double z = 1.0 - (2.0 * k + 1.0) / count;
        const double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double th = golden * k;
        out.push_back(make_vec({r * rad * std::cos(th), r * rad * std::sin(th), r * z}));
      }
    } else {
      const int n_lat = std::max(1, static_cast<int>(std::lround(std::sqrt(count / 2.0))));
      const int n_lon = std::max(1, count / n_lat);
      for (int a = 0; a < n_lat; ++a) {
        const double z = 1.0 - (2.0 * a + 1.0) / n_lat;
        const double rad = std::sqrt(std::max(0.0, 1.0 - z * z));
        for (int b = 0; b < n_lon; ++b) {
          const double th = two_pi * (b + 0.5) / n_lon;
          out.push_back(make_vec({r * rad * std::cos(th), r * rad * std::sin(th), r * z}));
        }
      }
    }
    return out;
  }
  // dim >= 4: Halton points pushed through the normal quantile, then normalized.
  for (int k = 0; k < count; ++k) {
    Vec v(dim);
    for (int i = 0; i < dim; ++i) {
      const double u = radical_inverse(static_cast<std::uint64_t>(k) + 1, kPrimes[i]);
      v[i] = inverse_normal_cdf(std::clamp(u, 1e-12, 1.0 - 1e-12));
    }
    const double nrm = v.norm();
    out.push_back(nrm > 0.0 ? Vec(v * (r / nrm)) : Vec(Vec::Zero(dim)));
  }
  return out;
}

PolyField canonical_w(ModelKind kind) {
  switch (kind) {
    case ModelKind::heisenberg:
      return PolyField::monomial(3, {4, 0, 0}, 1.0 / 12.0) +
             PolyField::monomial(3, {0, 4, 0}, 1.0 / 12.0) +
             PolyField::monomial(3, {0, 0, 2}, 0.5);
    case ModelKind::grushin:
    case ModelKind::lions_musiela:
      return PolyField::monomial(2, {4, 0}, 1.0 / 12.0) + PolyField::monomial(2, {0, 2}, 0.5);
    case ModelKind::ou_identity:
      break;
  }
  throw ConfigError("no canonical Lyapunov candidate for model kind '" + to_string(kind) + "'");
}

PolyField canonical_w(const std::string& model_kind) {
  return canonical_w(parse_model_kind(model_kind));
}

double heisenberg_Lw_closed_form(const DriftSpec& drift, double rho, const Vec& x) {
  if (x.size() != 3) throw DimensionError("heisenberg closed form needs a 3-d point");
  const double b1 = drift.kind == DriftKind::ou ? -drift.gamma * x[0] : drift.component(0, x[0]);
  const double b2 = drift.kind == DriftKind::ou ? -drift.gamma * x[1] : drift.component(1, x[1]);
  const double b3 = drift.kind == DriftKind::ou ? -drift.gamma * x[2] : drift.component(2, x[2]);
  return -5.0 * (x[0] * x[0] + x[1] * x[1]) - rho * rho -
         (b1 * x[0] * x[0] * x[0] + b2 * x[1] * x[1] * x[1]) / 3.0 - b3 * x[2];
}

namespace {

void check_candidate(const LyapunovCandidate& c) {
  if (field_dim(c.field) != c.model.dim()) {
    throw DimensionError("Lyapunov candidate dimension does not match the model");
  }
}

struct ShellResult {
  ShellMin summary;
  std::vector<Vec> violations;
  std::size_t negative_w = 0;
};

ShellResult scan_one(const LyapunovCandidate& c, double r, const ShellScanConfig& cfg) {
  ShellResult res;
  res.summary.r = r;
  res.summary.min_value = std::numeric_limits<double>::infinity();
  for (const Vec& x : sphere_points(c.model.dim(), r, cfg.samples_per_shell, cfg.sampling)) {
    const double v = apply_elliptic_L(c.model, c.field, x).elliptic_L;
    if (v < res.summary.min_value) {
      res.summary.min_value = v;
      res.summary.argmin = x;
    }
    if (!(v >= c.target)) {
      ++res.summary.violations;
      res.violations.push_back(x);
    }
    if (field_value(c.field, x) < 0.0) ++res.negative_w;
  }
  return res;
}

}  // namespace

LyapunovReport scan_shells(const LyapunovCandidate& candidate, const ShellScanConfig& cfg) {
  cfg.validate();
  check_candidate(candidate);
  std::vector<ShellResult> results(static_cast<std::size_t>(cfg.shells));
  parallel_for(results.size(), cfg.workers, [&](std::size_t i) {
    results[i] = scan_one(candidate, cfg.radius(static_cast<int>(i)), cfg);
  });

  LyapunovReport rep;
  for (auto& s : results) {
    rep.shells.push_back(s.summary);
    rep.violation_count += s.summary.violations;
    rep.negative_w_count += s.negative_w;
    for (auto& v : s.violations) {
      if (rep.violations.size() < cfg.max_violations_kept) rep.violations.push_back(std::move(v));
    }
  }
  rep.r0_estimate = std::numeric_limits<double>::infinity();
  for (int i = cfg.shells - 1; i >= 0; --i) {
    if (rep.shells[static_cast<std::size_t>(i)].violations != 0) break;
    rep.r0_estimate = rep.shells[static_cast<std::size_t>(i)].r;
  }
  rep.passed = rep.violation_count == 0 && rep.negative_w_count == 0;
  return rep;
}

double find_min_R0(const LyapunovCandidate& candidate, const ShellScanConfig& cfg) {
  cfg.validate();
  check_candidate(candidate);
  auto shell_passes = [&](double r) { return scan_one(candidate, r, cfg).summary.violations == 0; };
  if (!shell_passes(cfg.r_max)) {
    throw NotFoundError("no passing radius in [" + std::to_string(cfg.r_min) + ", " +
                        std::to_string(cfg.r_max) + "]");
  }
  if (shell_passes(cfg.r_min)) return cfg.r_min;
  const double resolution = (cfg.r_max - cfg.r_min) / cfg.shells;
  double lo = cfg.r_min;
  double hi = cfg.r_max;
  while (hi - lo > resolution) {
    const double mid = 0.5 * (lo + hi);
    (shell_passes(mid) ? hi : lo) = mid;
  }
  return hi;
}

Alpha0Thresholds alpha0_thresholds(double R, double K1, double K2, double K3) {
  if (R < 0.0 || K1 < 0.0 || K2 < 0.0 || K3 < 0.0) {
    throw ConfigError("alpha0_thresholds: R and K_i must be non-negative");
  }
  Alpha0Thresholds t;
  const double R2 = R * R;
  const double R3 = R2 * R;
  const double case1 = 1.0;
  const double case2 = 10.0 * R2 + R3 * (K1 + K2) / 3.0 + 1.0;
  const double case3 = 5.0 * R2 + R3 * std::max(K1, K2) / 3.0 + 1.0;
  t.C3_min = std::max({case1, case2, case3});
  return t;
}

double drift_sup_on_interval(const DriftSpec& drift, int i, double R, int samples) {
  if (R < 0.0) throw ConfigError("drift_sup_on_interval: R must be >= 0");
  double m = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double x = samples == 1 ? 0.0 : -R + 2.0 * R * k / (samples - 1);
    m = std::max(m, std::abs(drift.component(i, x)));
  }
  return m;
}

// ---------------------------------------------------------------------------

BlackBoxField smooth_cutoff(int dim, double inner, double outer) {
  if (!(inner > 0.0) || !(outer > inner)) throw ConfigError("smooth_cutoff needs 0 < inner < outer");
  BlackBoxField f;
  f.name = "cutoff";
  f.dim = dim;
  f.fn = [inner, outer](const Vec& x) {
    const double t = (x.norm() - inner) / (outer - inner);
    if (t <= 0.0) return 1.0;
    if (t >= 1.0) return 0.0;
    const double a = std::exp(-1.0 / (1.0 - t));
    const double b = std::exp(-1.0 / t);
    return a / (a + b);
  };
  return f;
}

double WitnessC2Barra::phi(const DiffusionModel& model, const Vec& x) const {
  return apply_elliptic_L(model, w_flat, x).elliptic_L + field_value(chi, x) * w_flat.value(x);
}

namespace {

// Maximize g over the closed ball B(0, r): cube grid then a shrinking pattern search
// from the best few grid points, projecting back onto the ball.
template <class G>
double ball_max(int dim, double r, std::size_t grid_points, G&& g) {
  const int per_axis =
      std::max(3, static_cast<int>(std::lround(std::pow(static_cast<double>(grid_points), 1.0 / dim))));
  const double h = 2.0 * r / (per_axis - 1);
  struct Best {
    double v;
    Vec x;
  };
  std::vector<Best> best;
  constexpr std::size_t kSeeds = 8;
  std::vector<int> idx(static_cast<std::size_t>(dim), 0);
  Vec x(dim);
  for (;;) {
    for (int i = 0; i < dim; ++i) x[i] = -r + h * idx[static_cast<std::size_t>(i)];
    if (x.squaredNorm() <= r * r * (1.0 + 1e-12)) {
      const double v = g(x);
      if (best.size() < kSeeds || v > best.back().v) {
        best.push_back({v, x});
        std::sort(best.begin(), best.end(), [](const Best& a, const Best& b) { return a.v > b.v; });
        if (best.size() > kSeeds) best.pop_back();
      }
    }
    int k = 0;
    while (k < dim && ++idx[static_cast<std::size_t>(k)] == per_axis) idx[static_cast<std::size_t>(k++)] = 0;
    if (k == dim) break;
  }
  // The boundary sphere often carries the maximum of polynomial fields.
  for (const Vec& p : sphere_points(dim, r, 2048, SphereSampling::low_discrepancy)) {
    const double v = g(p);
    if (v > best.back().v) {
      best.back() = {v, p};
      std::sort(best.begin(), best.end(), [](const Best& a, const Best& b) { return a.v > b.v; });
    }
  }
  double out = best.front().v;
  for (auto& b : best) {
    Vec cur = b.x;
    double val = b.v;
    double step = h;
    while (step > 1e-10 * std::max(1.0, r)) {
      bool improved = false;
      for (int i = 0; i < dim; ++i) {
        for (double s : {step, -step}) {
          Vec y = cur;
          y[i] += s;
          const double n = y.norm();
          if (n > r) y *= r / n;
          const double v = g(y);
          if (v > val) {
            val = v;
            cur = y;
            improved = true;
          }
        }
      }
      if (!improved) step *= 0.5;
    }
    out = std::max(out, val);
  }
  return out;
}

}  // namespace

WitnessC2Barra build_c2barra_witness(const LyapunovCandidate& candidate, double r0,
                                     const WitnessConfig& cfg) {
  check_candidate(candidate);
  if (!(r0 > 0.0)) throw ConfigError("witness needs R0 > 0");
  const auto* w = std::get_if<PolyField>(&candidate.field);
  if (!w) throw UnsupportedError("witness construction needs a polynomial candidate");
  const DiffusionModel& model = candidate.model;
  const int n = model.dim();

  WitnessC2Barra out;
  out.r0 = r0;
  out.K = ball_max(n, r0, cfg.grid_points, [&](const Vec& x) { return std::abs(w->value(x)); });
  out.K_G = ball_max(n, r0, cfg.grid_points, [&](const Vec& x) {
    return std::abs(apply_elliptic_L(model, *w, x).elliptic_L);
  });
  out.w_flat = *w + PolyField::constant(n, out.K + out.K_G + 1.0);
  out.chi = smooth_cutoff(n, r0, 2.0 * r0);

  const int shells = std::max(1, cfg.verify_shells);
  const double outer = cfg.outer_factor * r0;
  out.phi_min = std::numeric_limits<double>::infinity();
  out.phi_radially_increasing = true;
  std::vector<double> prev;
  {
    const Vec origin = Vec::Zero(n);
    const double p = out.phi(model, origin);
    out.phi_values.push_back({origin, p});
    out.phi_min = p;
  }
  for (int j = 1; j <= shells; ++j) {
    const double r = outer * j / shells;
    const auto pts = sphere_points(n, r, cfg.verify_samples, SphereSampling::low_discrepancy);
    std::vector<double> cur(pts.size());
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const double p = out.phi(model, pts[k]);
      cur[k] = p;
      out.phi_values.push_back({pts[k], p});
      out.phi_min = std::min(out.phi_min, p);
      if (r >= 2.0 * r0) {
        out.support_residual = std::max(out.support_residual, field_value(out.chi, pts[k]));
        if (!prev.empty() && p < prev[k]) out.phi_radially_increasing = false;
      }
    }
    prev = r >= 2.0 * r0 ? cur : std::vector<double>{};
  }
  for (const auto& wp : out.phi_values) {
    if (!(wp.phi >= 1.0)) {
      throw WitnessFailure("witness phi = L w_flat + chi w_flat drops below 1", wp.x, wp.phi);
    }
  }
  return out;
}

}  // namespace ergo
