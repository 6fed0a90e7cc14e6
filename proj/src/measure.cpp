#include "ergo/measure.hpp"

#include "ergo/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ergo {

Vec EmpiricalMeasure::point(std::size_t k) const {
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = samples[k * static_cast<std::size_t>(dim) + i];
  return v;
}

std::vector<double> EmpiricalMeasure::coordinate(int i) const {
  std::vector<double> out(size());
  for (std::size_t k = 0; k < size(); ++k) out[k] = samples[k * static_cast<std::size_t>(dim) + i];
  return out;
}

void EmpiricalMeasure::normalize() {
  double s = 0.0;
  for (double w : weights) s += w;
  if (!(s > 0.0)) throw Error("measure has no mass");
  for (double& w : weights) w /= s;
}

std::string to_string(SampleSource p) { return p == SampleSource::occupation ? "occupation" : "ensemble"; }

EmpiricalMeasure occupation_measure(const Trajectory& traj, double burn_in, std::uint64_t thin) {
  if (thin < 1) throw ConfigError("thinning must be >= 1");
  if (burn_in < 0.0) throw ConfigError("burn-in must be >= 0");
  EmpiricalMeasure m;
  m.dim = traj.dim;
  m.source = SampleSource::occupation;
  m.burn_in = burn_in;
  m.thin = thin;
  const double spacing = traj.sample_spacing();
  // First recorded index with time >= burn_in (tolerant to rounding of k * spacing).
  auto first = static_cast<std::size_t>(std::ceil(burn_in / spacing - 1e-9));
  for (std::size_t k = first; k < traj.size(); k += thin) {
    for (int i = 0; i < traj.dim; ++i) {
      m.samples.push_back(traj.states[k * static_cast<std::size_t>(traj.dim) + i]);
    }
  }
  const std::size_t n = m.samples.size() / static_cast<std::size_t>(std::max(1, m.dim));
  if (n == 0) throw ConfigError("occupation measure: empty window after burn-in");
  m.weights.assign(n, 1.0 / static_cast<double>(n));
  return m;
}

EmpiricalMeasure ensemble_snapshot_measure(const Ensemble& ens, double t) {
  if (ens.paths.empty()) throw ConfigError("empty ensemble");
  if (t < 0.0 || t > ens.config.horizon() * (1.0 + 1e-12)) {
    throw ConfigError("snapshot time beyond the ensemble horizon");
  }
  const auto& p0 = ens.paths.front();
  const auto k = static_cast<std::size_t>(std::llround(t / p0.sample_spacing()));
  EmpiricalMeasure m;
  m.dim = p0.dim;
  m.source = SampleSource::ensemble;
  for (const auto& p : ens.paths) {
    if (p.blew_up || k >= p.size()) continue;
    for (int i = 0; i < p.dim; ++i) m.samples.push_back(p.states[k * static_cast<std::size_t>(p.dim) + i]);
  }
  const std::size_t n = m.samples.size() / static_cast<std::size_t>(m.dim);
  if (n == 0) throw Error("snapshot: every path blew up before t");
  m.weights.assign(n, 1.0 / static_cast<double>(n));
  return m;
}

EmpiricalMeasure dirac_measure(const Vec& p) {
  EmpiricalMeasure m;
  m.dim = static_cast<int>(p.size());
  for (int i = 0; i < m.dim; ++i) m.samples.push_back(p[i]);
  m.weights = {1.0};
  return m;
}

Estimate integrate_with_se(const EmpiricalMeasure& m, const std::function<double(const Vec&)>& g,
                           std::size_t batches) {
  Estimate e;
  e.value = integrate(m, g);
  const std::size_t n = m.size();
  if (n < 2) return e;
  // SE formulas assume (near-)uniform weights; scale values by n w_k to stay exact otherwise.
  std::vector<double> vals(n);
  for (std::size_t k = 0; k < n; ++k) vals[k] = static_cast<double>(n) * m.weights[k] * g(m.point(k));
  e.se = m.source == SampleSource::occupation ? batch_means(vals, batches).se : mean_and_se(vals).se;
  return e;
}

MomentSummary moments(const EmpiricalMeasure& m) {
  const int d = m.dim;
  MomentSummary s;
  s.mean = Vec::Zero(d);
  s.cov = Mat::Zero(d, d);
  for (std::size_t k = 0; k < m.size(); ++k) s.mean += m.weights[k] * m.point(k);
  for (std::size_t k = 0; k < m.size(); ++k) {
    const Vec c = m.point(k) - s.mean;
    s.cov += m.weights[k] * (c * c.transpose());
  }
  s.mean_se = Vec::Zero(d);
  for (int i = 0; i < d; ++i) {
    s.mean_se[i] = integrate_with_se(m, [i](const Vec& x) { return x[i]; }).se;
  }
  return s;
}

bool ResidualReport::all_pass() const {
  return std::all_of(entries.begin(), entries.end(), [](const ResidualEntry& e) { return e.pass; });
}

std::vector<NamedField> default_dictionary(int dim, double envelope_scale) {
  std::vector<NamedField> out;
  auto add = [&](std::string name, PolyField p) {
    out.push_back({std::move(name), EnvelopedField{std::move(p), envelope_scale, std::nullopt}});
  };
  for (int i = 0; i < dim; ++i) {
    add("x" + std::to_string(i + 1), PolyField::coordinate(dim, i));
  }
  for (int i = 0; i < dim; ++i) {
    add("x" + std::to_string(i + 1) + "^2", PolyField::coordinate(dim, i) * PolyField::coordinate(dim, i));
  }
  for (int i = 0; i < dim; ++i) {
    for (int j = i + 1; j < dim; ++j) {
      add("x" + std::to_string(i + 1) + "x" + std::to_string(j + 1),
          PolyField::coordinate(dim, i) * PolyField::coordinate(dim, j));
    }
  }
  return out;
}

ResidualReport adjoint_residual(const DiffusionModel& model, const EmpiricalMeasure& m,
                                const std::vector<NamedField>& dictionary, double abs_tol) {
  if (m.dim != model.dim()) throw DimensionError("measure and model dimensions differ");
  ResidualReport rep;
  rep.abs_tol = abs_tol;
  for (const auto& nf : dictionary) {
    if (field_dim(nf.field) != model.dim()) throw DimensionError("dictionary field dimension mismatch");
    const Estimate e = integrate_with_se(m, [&](const Vec& x) {
      const double g = apply_elliptic_L(model, nf.field, x).markov_gen;
      if (!std::isfinite(g)) throw Error("non-finite generator value for '" + nf.name + "'");
      return g;
    });
    rep.entries.push_back({nf.name, e.value, e.se, std::abs(e.value) <= 3.0 * e.se + abs_tol});
  }
  return rep;
}

TailMassReport tail_mass(const EmpiricalMeasure& m, const std::vector<double>& radii,
                         const WitnessC2Barra* witness, const DiffusionModel* model) {
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0) || (i > 0 && !(radii[i] > radii[i - 1]))) {
      throw ConfigError("tail radii must be positive and increasing");
    }
  }
  TailMassReport rep;
  rep.radii = radii;
  std::vector<double> norms(m.size());
  for (std::size_t k = 0; k < m.size(); ++k) norms[k] = m.point(k).norm();
  for (double r : radii) {
    double mass = 0.0;
    for (std::size_t k = 0; k < m.size(); ++k) {
      if (norms[k] > r) mass += m.weights[k];
    }
    rep.tail_mass.push_back(mass);
  }
  if (witness) {
    if (!model) throw ConfigError("tail_mass: a witness needs its model");
    rep.phi_integral = integrate(m, [&](const Vec& x) { return witness->phi(*model, x); });
    for (double r : radii) {
      double floor = std::numeric_limits<double>::infinity();
      for (const auto& wp : witness->phi_values) {
        if (wp.x.norm() >= r) floor = std::min(floor, wp.phi);
      }
      rep.phi_floor.push_back(floor);
      rep.markov_bound.push_back(std::isfinite(floor) ? *rep.phi_integral / floor
                                                      : std::numeric_limits<double>::quiet_NaN());
    }
  }
  return rep;
}

MeasureDistance compare_measures(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  if (a.dim != b.dim) throw DimensionError("compare_measures: dimension mismatch");
  MeasureDistance d;
  for (int i = 0; i < a.dim; ++i) {
    const auto ca = a.coordinate(i);
    const auto cb = b.coordinate(i);
    d.ks.push_back(ks_two_sample(ca, a.weights, cb, b.weights));
    d.max_ks = std::max(d.max_ks, d.ks.back());
  }
  const MomentSummary ma = moments(a), mb = moments(b);
  d.mean_distance = (ma.mean - mb.mean).norm();
  d.cov_distance = (ma.cov - mb.cov).norm();
  d.ks_scale = ks_noise_scale(a.size(), b.size());
  d.low_power = a.size() < 100 || b.size() < 100;
  return d;
}

double ks_marginal(const EmpiricalMeasure& m, int coord, const std::function<double(double)>& cdf) {
  if (coord < 0 || coord >= m.dim) throw DimensionError("ks_marginal: coordinate out of range");
  return ks_against_cdf(m.coordinate(coord), m.weights, cdf);
}

SweepTable rho_sweep_study(const std::string& model_name, const DriftSpec& drift,
                           const std::vector<double>& rho_list, const SweepConfig& cfg) {
  for (std::size_t i = 0; i < rho_list.size(); ++i) {
    if (!(rho_list[i] > 0.0)) throw ConfigError("rho sweep values must be positive");
    if (i > 0 && !(rho_list[i] < rho_list[i - 1])) throw ConfigError("rho sweep must be descending");
  }
  if (!(cfg.T > cfg.burn) || cfg.burn < 0.0) throw ConfigError("sweep needs 0 <= burn < T");
  std::vector<double> rhos{0.0};
  rhos.insert(rhos.end(), rho_list.begin(), rho_list.end());

  SimConfig sim;
  sim.dt = cfg.dt;
  sim.steps = static_cast<std::uint64_t>(std::llround(cfg.T / cfg.dt));
  sim.seed = cfg.seed;
  sim.record_stride = cfg.record_stride;
  sim.x0 = cfg.x0;

  std::vector<EmpiricalMeasure> measures(rhos.size());
  std::vector<DiffusionModel> models;
  for (double r : rhos) models.push_back(build_model(model_name, drift, r));
  std::vector<bool> blew(rhos.size(), false);
  parallel_for(rhos.size(), cfg.workers, [&](std::size_t i) {
    const Trajectory tr = simulate_path(models[i], sim, cfg.stream);
    blew[i] = tr.blew_up;
    measures[i] = occupation_measure(tr, cfg.burn, 1);
  });

  SweepTable table;
  const auto dict = default_dictionary(models[0].dim(), cfg.envelope_scale);
  for (std::size_t i = 0; i < rhos.size(); ++i) {
    SweepRow row;
    row.rho = rhos[i];
    row.samples = measures[i].size();
    row.moments = moments(measures[i]);
    row.residuals = adjoint_residual(models[i], measures[i], dict, cfg.residual_tol);
    row.to_baseline = compare_measures(measures[i], measures[0]);
    row.tails = tail_mass(measures[i], cfg.tail_radii);
    row.blew_up = blew[i];
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string SweepTable::to_csv() const {
  std::ostringstream os;
  os.precision(10);
  if (rows.empty()) {
    os << "rho,samples\n";
    return os.str();
  }
  const int d = static_cast<int>(rows.front().moments.mean.size());
  os << "rho,samples";
  for (int i = 0; i < d; ++i) os << ",mean_x" << i + 1;
  for (int i = 0; i < d; ++i) os << ",var_x" << i + 1;
  for (int i = 0; i < d; ++i) os << ",ks_x" << i + 1;
  os << ",max_ks,max_abs_residual,residuals_pass";
  for (double r : rows.front().tails.radii) os << ",tail_mass_R" << r;
  os << "\n";
  for (const auto& row : rows) {
    os << row.rho << ',' << row.samples;
    for (int i = 0; i < d; ++i) os << ',' << row.moments.mean[i];
    for (int i = 0; i < d; ++i) os << ',' << row.moments.cov(i, i);
    for (int i = 0; i < d; ++i) os << ',' << row.to_baseline.ks[static_cast<std::size_t>(i)];
    double max_res = 0.0;
    for (const auto& e : row.residuals.entries) max_res = std::max(max_res, std::abs(e.residual));
    os << ',' << row.to_baseline.max_ks << ',' << max_res << ',' << (row.residuals.all_pass() ? 1 : 0);
    for (double t : row.tails.tail_mass) os << ',' << t;
    os << "\n";
  }
  return os.str();
}

}  // namespace ergo
