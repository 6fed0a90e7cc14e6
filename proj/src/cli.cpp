#include "ergo/cli.hpp"

#include "ergo/calculus.hpp"
#include "ergo/trajectory_io.hpp"
#include "ergo/version.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

namespace ergo::cli {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Config serialization

void to_json(json& j, const RunConfig& c) {
  j = json{{"subcommand", c.subcommand},
           {"model", c.model},
           {"drift", c.drift},
           {"rho", c.rho},
           {"seed", c.seed},
           {"workers", c.workers},
           {"dt", c.dt},
           {"steps", c.steps},
           {"stride", c.stride},
           {"stream", c.stream},
           {"x0", c.x0},
           {"rmin", c.rmin},
           {"rmax", c.rmax},
           {"shells", c.shells},
           {"samples", c.samples},
           {"sampling", c.sampling},
           {"find_r0", c.find_r0},
           {"T", c.T},
           {"burn", c.burn},
           {"rhos", c.rhos},
           {"tail_radii", c.tail_radii},
           {"residual_tol", c.residual_tol},
           {"ks_tol", c.ks_tol},
           {"tail_tol", c.tail_tol},
           {"in", c.in},
           {"f", c.f},
           {"deltas", c.deltas},
           {"times", c.times},
           {"M", c.M},
           {"eps_tail", c.eps_tail},
           {"abs_tol", c.abs_tol},
           {"long_T", c.long_T},
           {"long_burn", c.long_burn},
           {"point", c.point},
           {"order", c.order},
           {"json", c.json},
           {"csv", c.csv},
           {"gnuplot", c.gnuplot},
           {"out", c.out}};
}

namespace {

template <class T>
void read_key(const json& j, const char* key, T& field) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace

void from_json(const json& j, RunConfig& c) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  const json known = RunConfig{};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  read_key(j, "subcommand", c.subcommand);
  read_key(j, "model", c.model);
  read_key(j, "drift", c.drift);
  read_key(j, "rho", c.rho);
  read_key(j, "seed", c.seed);
  read_key(j, "workers", c.workers);
  read_key(j, "dt", c.dt);
  read_key(j, "steps", c.steps);
  read_key(j, "stride", c.stride);
  read_key(j, "stream", c.stream);
  read_key(j, "x0", c.x0);
  read_key(j, "rmin", c.rmin);
  read_key(j, "rmax", c.rmax);
  read_key(j, "shells", c.shells);
  read_key(j, "samples", c.samples);
  read_key(j, "sampling", c.sampling);
  read_key(j, "find_r0", c.find_r0);
  read_key(j, "T", c.T);
  read_key(j, "burn", c.burn);
  read_key(j, "rhos", c.rhos);
  read_key(j, "tail_radii", c.tail_radii);
  read_key(j, "residual_tol", c.residual_tol);
  read_key(j, "ks_tol", c.ks_tol);
  read_key(j, "tail_tol", c.tail_tol);
  read_key(j, "in", c.in);
  read_key(j, "f", c.f);
  read_key(j, "deltas", c.deltas);
  read_key(j, "times", c.times);
  read_key(j, "M", c.M);
  read_key(j, "eps_tail", c.eps_tail);
  read_key(j, "abs_tol", c.abs_tol);
  read_key(j, "long_T", c.long_T);
  read_key(j, "long_burn", c.long_burn);
  read_key(j, "point", c.point);
  read_key(j, "order", c.order);
  read_key(j, "json", c.json);
  read_key(j, "csv", c.csv);
  read_key(j, "gnuplot", c.gnuplot);
  read_key(j, "out", c.out);
}

// ---------------------------------------------------------------------------
// Option-string parsing

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double parse_number(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("not a number: '" + s + "'");
  }
  if (used != s.size()) throw ConfigError("not a number: '" + s + "'");
  return v;
}

// "kind:key=value;key=value" -> kind and key/value pairs.
std::pair<std::string, std::map<std::string, std::string>> parse_kv_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string kind = trim(spec.substr(0, colon));
  std::map<std::string, std::string> kv;
  if (colon != std::string::npos) {
    for (const auto& part : split(spec.substr(colon + 1), ';')) {
      if (part.empty()) continue;
      const auto eq = part.find('=');
      if (eq == std::string::npos) throw ConfigError("expected key=value in '" + part + "'");
      kv[trim(part.substr(0, eq))] = trim(part.substr(eq + 1));
    }
  }
  return {kind, kv};
}

double take(std::map<std::string, std::string>& kv, const std::string& key, double fallback) {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  const double v = parse_number(it->second);
  kv.erase(it);
  return v;
}

void reject_rest(const std::map<std::string, std::string>& kv, const std::string& what) {
  if (!kv.empty()) throw ConfigError("unknown " + what + " parameter '" + kv.begin()->first + "'");
}

}  // namespace

std::vector<double> parse_list(const std::string& spec) {
  std::vector<double> out;
  if (trim(spec).empty()) return out;
  for (const auto& p : split(spec, ',')) out.push_back(parse_number(p));
  return out;
}

std::vector<std::vector<double>> parse_points(const std::string& spec) {
  std::vector<std::vector<double>> out;
  if (trim(spec).empty()) return out;
  for (const auto& p : split(spec, ';')) out.push_back(parse_list(p));
  return out;
}

Vec to_vec(const std::vector<double>& v) {
  if (v.size() > static_cast<std::size_t>(kMaxDim)) throw DimensionError("point has too many coordinates");
  Vec x(static_cast<int>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) x[static_cast<int>(i)] = v[i];
  return x;
}

DriftSpec parse_drift(const std::string& spec) {
  auto [kind, kv] = parse_kv_spec(spec);
  if (kind == "zero") {
    reject_rest(kv, "drift");
    return DriftSpec::zero();
  }
  if (kind == "ou") {
    const double g = take(kv, "gamma", 1.0);
    reject_rest(kv, "drift");
    return DriftSpec::ou(g);
  }
  if (kind == "power") {
    const auto it = kv.find("C");
    if (it == kv.end()) throw ConfigError("power drift needs C=c1,c2,...");
    const std::vector<double> C = parse_list(it->second);
    kv.erase(it);
    const double alpha = take(kv, "alpha", 2.0);
    const double R = take(kv, "R", 1.0);
    reject_rest(kv, "drift");
    return DriftSpec::power(C, alpha, R);
  }
  throw ConfigError("unknown drift kind '" + kind + "' (zero, ou, power)");
}

ScalarField parse_observable(const std::string& spec, int dim) {
  auto [kind, kv] = parse_kv_spec(spec);
  if (kind == "gauss") {
    const double s = take(kv, "s", 1.0);
    const double a = take(kv, "a", 1.0);
    reject_rest(kv, "observable");
    if (!(s > 0.0)) throw ConfigError("gauss observable needs s > 0");
    return gaussian_field(dim, s, a);
  }
  if (kind == "const") {
    const double c = take(kv, "c", 1.0);
    reject_rest(kv, "observable");
    return PolyField::constant(dim, c);
  }
  throw ConfigError("unknown observable '" + kind + "' (gauss, const)");
}

DiffusionModel model_from(const RunConfig& c) {
  if (c.rho < 0.0) throw ConfigError("rho must be >= 0");
  return build_model(c.model, parse_drift(c.drift), c.rho);
}

// ---------------------------------------------------------------------------
// Report serialization

namespace {

json vec_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json mat_json(const Mat& m) {
  json a = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    a.push_back(row);
  }
  return a;
}

json estimate_json(const Estimate& e) { return {{"value", e.value}, {"se", e.se}}; }

json residuals_json(const ResidualReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries) {
    entries.push_back({{"name", e.name}, {"residual", e.residual}, {"se", e.se}, {"pass", e.pass}});
  }
  return {{"abs_tol", r.abs_tol}, {"all_pass", r.all_pass()}, {"entries", entries}};
}

json moments_json(const MomentSummary& m) {
  return {{"mean", vec_json(m.mean)}, {"mean_se", vec_json(m.mean_se)}, {"cov", mat_json(m.cov)}};
}

json tails_json(const TailMassReport& t) {
  return {{"radii", t.radii}, {"tail_mass", t.tail_mass}};
}

json spread_json(const SpreadReport& s) {
  json levels = json::array();
  for (const auto& l : s.levels) {
    levels.push_back({{"level", l.level},
                      {"spread", l.spread},
                      {"combined_se", l.combined_se},
                      {"argmax", l.argmax},
                      {"argmin", l.argmin},
                      {"pass", l.pass}});
  }
  return {{"abs_tol", s.abs_tol},
          {"decreasing", s.decreasing},
          {"final_pass", s.final_pass},
          {"pass", s.pass()},
          {"levels", levels}};
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

}  // namespace

json to_json(const LyapunovReport& r, std::size_t max_violations) {
  json shells = json::array();
  for (const auto& s : r.shells) {
    shells.push_back({{"r", s.r}, {"min", s.min_value}, {"argmin", vec_json(s.argmin)}, {"violations", s.violations}});
  }
  json viol = json::array();
  for (std::size_t i = 0; i < r.violations.size() && i < max_violations; ++i) {
    viol.push_back(vec_json(r.violations[i]));
  }
  return {{"passed", r.passed},
          {"r0_estimate", std::isfinite(r.r0_estimate) ? json(r.r0_estimate) : json(nullptr)},
          {"violation_count", r.violation_count},
          {"negative_w_count", r.negative_w_count},
          {"shells", shells},
          {"violations", viol}};
}

json to_json(const SweepTable& t) {
  json rows = json::array();
  for (const auto& row : t.rows) {
    rows.push_back({{"rho", row.rho},
                    {"samples", row.samples},
                    {"blew_up", row.blew_up},
                    {"moments", moments_json(row.moments)},
                    {"ks_to_baseline", row.to_baseline.ks},
                    {"max_ks", row.to_baseline.max_ks},
                    {"ks_scale", row.to_baseline.ks_scale},
                    {"mean_distance", row.to_baseline.mean_distance},
                    {"cov_distance", row.to_baseline.cov_distance},
                    {"residuals", residuals_json(row.residuals)},
                    {"tails", tails_json(row.tails)}});
  }
  return {{"rows", rows}};
}

json to_json(const ErgodicReport& r) {
  json drows = json::array();
  for (const auto& row : r.discounted.rows) {
    drows.push_back({{"delta", row.delta}, {"x0", row.x0_index}, {"lambda_hat", row.lambda_hat}, {"se", row.se}});
  }
  json ext = json::array();
  for (const auto& e : r.discounted.extrapolated) ext.push_back(estimate_json(e));
  json horizons = json::array();
  std::size_t blow_ups = 0, dviol = 0, cviol = 0;
  for (const auto& pf : r.discounted.samples) {
    blow_ups += pf.blow_ups;
    dviol += pf.discount_bound_violations;
    cviol += pf.cauchy_bound_violations;
  }
  if (!r.discounted.samples.empty()) horizons = r.discounted.samples.front().horizons;
  json trows = json::array();
  for (const auto& row : r.longtime.rows) {
    trows.push_back({{"t", row.t},
                     {"x0", row.x0_index},
                     {"u_hat", row.u_hat},
                     {"u_se", row.u_se},
                     {"v_over_t", row.v_over_t},
                     {"v_se", row.v_se}});
  }
  json comps = json::array();
  for (const auto& c : r.comparisons) {
    comps.push_back({{"a", c.a}, {"b", c.b}, {"difference", c.difference}, {"combined_se", c.combined_se}, {"pass", c.pass}});
  }
  return {{"lambda",
           {{"invariant", estimate_json(r.lambda_invariant)},
            {"discounted", estimate_json(r.lambda_discounted)},
            {"cauchy", estimate_json(r.lambda_cauchy)},
            {"time_average", estimate_json(r.lambda_time_average)}}},
          {"discounted",
           {{"rows", drows},
            {"extrapolated", ext},
            {"horizons", horizons},
            {"inconclusive", r.discounted.inconclusive}}},
          {"longtime", {{"rows", trows}, {"inconclusive", r.longtime.inconclusive}}},
          {"bounds",
           {{"blow_ups", blow_ups},
            {"discount_bound_violations", dviol},
            {"cauchy_bound_violations", cviol}}},
          {"delta_spread", spread_json(r.delta_spread)},
          {"time_spread", spread_json(r.time_spread)},
          {"comparisons", comps},
          {"verdict", to_string(r.verdict)},
          {"notes", r.notes}};
}

std::string delta_sweep_csv(const DiscountedTable& t) {
  std::ostringstream os;
  os << "delta,x0,lambda_hat,se\n";
  for (const auto& r : t.rows) os << fmt(r.delta) << ',' << r.x0_index << ',' << fmt(r.lambda_hat) << ',' << fmt(r.se) << '\n';
  return os.str();
}

std::string time_sweep_csv(const LongTimeTable& t) {
  std::ostringstream os;
  os << "t,x0,u_hat,u_se,v_over_t,v_se\n";
  for (const auto& r : t.rows) {
    os << fmt(r.t) << ',' << r.x0_index << ',' << fmt(r.u_hat) << ',' << fmt(r.u_se) << ','
       << fmt(r.v_over_t) << ',' << fmt(r.v_se) << '\n';
  }
  return os.str();
}

SweepVerdict judge_sweep(const SweepTable& t, double ks_tol, double tail_tol) {
  SweepVerdict v;
  if (t.rows.size() < 2) {
    v.ks_final = v.trend = true;
  } else {
    v.ks_final = t.rows.back().to_baseline.max_ks <= ks_tol;
    v.trend = true;
    for (std::size_t i = 2; i < t.rows.size(); ++i) {
      const auto& prev = t.rows[i - 1].to_baseline;
      const auto& cur = t.rows[i].to_baseline;
      if (cur.max_ks > prev.max_ks + std::max(prev.ks_scale, cur.ks_scale)) v.trend = false;
    }
  }
  v.tails = true;
  for (const auto& row : t.rows) {
    for (double m : row.tails.tail_mass) {
      if (m > tail_tol) v.tails = false;
    }
    if (row.blew_up) v.tails = false;
  }
  return v;
}

// ---------------------------------------------------------------------------
// Subcommands

namespace {

std::vector<Vec> starts(const RunConfig& c, int dim) {
  std::vector<Vec> out;
  for (const auto& p : c.x0) {
    if (static_cast<int>(p.size()) != dim) throw DimensionError("x0 dimension does not match the model");
    out.push_back(to_vec(p));
  }
  if (out.empty()) out.push_back(Vec::Zero(dim));
  return out;
}

SphereSampling parse_sampling(const std::string& s) {
  if (s == "low-discrepancy") return SphereSampling::low_discrepancy;
  if (s == "grid") return SphereSampling::grid;
  throw ConfigError("unknown sampling '" + s + "' (low-discrepancy, grid)");
}

EstimatorOptions estimator_options(const RunConfig& c) {
  EstimatorOptions o;
  o.M = static_cast<std::size_t>(c.M);
  o.dt = c.dt;
  o.seed = c.seed;
  o.eps_tail = c.eps_tail;
  o.workers = c.workers;
  return o;
}

// E exp(-|X|^2 / (2 s^2)) for X ~ N(0, v I_d).
double gauss_expectation(double a, double s, double v, int d) {
  return a * std::pow(1.0 + v / (s * s), -0.5 * d);
}

}  // namespace

Outcome run_lyapunov(const RunConfig& c) {
  const DiffusionModel model = model_from(c);
  LyapunovCandidate cand{canonical_w(model.kind()), model, 1.0};
  ShellScanConfig cfg;
  cfg.r_min = c.rmin;
  cfg.r_max = c.rmax;
  cfg.shells = c.shells;
  cfg.samples_per_shell = c.samples;
  cfg.sampling = parse_sampling(c.sampling);
  cfg.workers = c.workers;
  cfg.validate();
  const LyapunovReport rep = scan_shells(cand, cfg);
  Outcome o;
  o.result = to_json(rep);
  std::ostringstream s;
  s << "lyapunov: passed=" << (rep.passed ? "true" : "false") << " violations=" << rep.violation_count;
  if (c.find_r0) {
    try {
      const double r0 = find_min_R0(cand, cfg);
      o.result["min_r0"] = r0;
      s << " min_r0=" << fmt(r0);
    } catch (const NotFoundError&) {
      o.result["min_r0"] = nullptr;
      s << " min_r0=none";
    }
  }
  o.exit_code = rep.passed ? kExitPass : kExitFail;
  if (!rep.passed) {
    std::size_t shown = 0;
    for (const auto& v : rep.violations) {
      if (shown++ == 10) break;
      s << "\n  violation at (";
      for (int i = 0; i < v.size(); ++i) s << (i ? "," : "") << fmt(v[i]);
      s << ")";
    }
  }
  o.summary = s.str();
  return o;
}

Outcome run_simulate(const RunConfig& c) {
  const DiffusionModel model = model_from(c);
  SimConfig sim;
  sim.dt = c.dt;
  sim.steps = c.steps;
  sim.seed = c.seed;
  sim.record_stride = c.stride;
  sim.x0 = starts(c, model.dim()).front();
  const Trajectory tr = simulate_path(model, sim, c.stream);
  if (!c.out.empty()) write_trajectory(c.out, tr);
  Outcome o;
  o.result = {{"recorded", tr.size()},
              {"steps_completed", tr.steps_completed},
              {"blew_up", tr.blew_up},
              {"sample_spacing", tr.sample_spacing()},
              {"final_state", vec_json(tr.state(tr.size() - 1))}};
  o.exit_code = tr.blew_up ? kExitInconclusive : kExitPass;
  o.summary = "simulate: recorded " + std::to_string(tr.size()) + " states" + (tr.blew_up ? " (blew up)" : "");
  return o;
}

Outcome run_invariant(const RunConfig& c) {
  const DiffusionModel model = model_from(c);
  Trajectory tr;
  if (!c.in.empty()) {
    tr = read_trajectory(c.in);
    if (tr.dim != model.dim()) throw DimensionError("trajectory dimension does not match the model");
  } else {
    SimConfig sim;
    sim.dt = c.dt;
    sim.steps = static_cast<std::uint64_t>(std::llround(c.T / c.dt));
    sim.seed = c.seed;
    sim.record_stride = c.stride;
    sim.x0 = starts(c, model.dim()).front();
    tr = simulate_path(model, sim, c.stream);
  }
  const EmpiricalMeasure m = occupation_measure(tr, c.burn, 1);
  const ResidualReport res = adjoint_residual(model, m, default_dictionary(model.dim()), c.residual_tol);
  const TailMassReport tails = tail_mass(m, c.tail_radii);
  bool tails_ok = true;
  for (double t : tails.tail_mass) tails_ok = tails_ok && t <= c.tail_tol;
  Outcome o;
  o.result = {{"samples", m.size()},
              {"blew_up", tr.blew_up},
              {"moments", moments_json(moments(m))},
              {"residuals", residuals_json(res)},
              {"tails", tails_json(tails)}};
  if (tr.blew_up) {
    o.exit_code = kExitInconclusive;
  } else {
    o.exit_code = res.all_pass() && tails_ok ? kExitPass : kExitFail;
  }
  o.summary = std::string("invariant: residuals ") + (res.all_pass() ? "pass" : "fail") + ", tails " +
              (tails_ok ? "pass" : "fail") + ", samples " + std::to_string(m.size());
  return o;
}

Outcome run_sweep_rho(const RunConfig& c) {
  SweepConfig cfg;
  const DiffusionModel base = build_model(c.model, parse_drift(c.drift), 0.0);
  cfg.x0 = starts(c, base.dim()).front();
  cfg.T = c.T;
  cfg.burn = c.burn;
  cfg.dt = c.dt;
  cfg.record_stride = c.stride;
  cfg.seed = c.seed;
  cfg.stream = c.stream;
  cfg.tail_radii = c.tail_radii;
  cfg.residual_tol = c.residual_tol;
  cfg.workers = c.workers;
  const SweepTable t = rho_sweep_study(c.model, parse_drift(c.drift), c.rhos, cfg);
  const SweepVerdict v = judge_sweep(t, c.ks_tol, c.tail_tol);
  Outcome o;
  o.result = to_json(t);
  o.result["verdict"] = {{"ks_final", v.ks_final}, {"trend", v.trend}, {"tails", v.tails}, {"pass", v.pass()}};
  o.exit_code = v.pass() ? kExitPass : kExitFail;
  o.csv = t.to_csv();
  std::ostringstream g;
  for (const auto& row : t.rows) g << fmt(row.rho) << ' ' << fmt(row.to_baseline.max_ks) << '\n';
  o.gnuplot.emplace_back("ks", g.str());
  o.summary = std::string("sweep-rho: ") + (v.pass() ? "pass" : "fail") + " (ks_final=" + (v.ks_final ? "ok" : "bad") +
              ", trend=" + (v.trend ? "ok" : "bad") + ", tails=" + (v.tails ? "ok" : "bad") + ")";
  return o;
}

Outcome run_ergodic(const RunConfig& c) {
  const DiffusionModel model = model_from(c);
  const ScalarField f = parse_observable(c.f, model.dim());
  ErgodicConfig cfg;
  cfg.x0s = starts(c, model.dim());
  cfg.deltas = c.deltas;
  cfg.times = c.times;
  cfg.options = estimator_options(c);
  cfg.time_average_T = c.long_T;
  cfg.time_average_burn = c.long_burn;
  cfg.invariant_T = c.long_T;
  cfg.invariant_burn = c.long_burn;
  cfg.record_stride = c.stride;
  cfg.abs_tol = c.abs_tol;
  const ErgodicReport rep = cross_estimator_report(model, f, cfg);
  Outcome o;
  o.result = to_json(rep);
  o.result["x0s"] = c.x0.empty() ? json::array({std::vector<double>(static_cast<std::size_t>(model.dim()), 0.0)}) : json(c.x0);
  o.exit_code = rep.verdict == Verdict::pass ? kExitPass
                : rep.verdict == Verdict::fail ? kExitFail
                                               : kExitInconclusive;
  o.csv = delta_sweep_csv(rep.discounted);
  std::ostringstream gd, gt;
  for (std::size_t xi = 0; xi < cfg.x0s.size(); ++xi) {
    if (xi) gd << "\n\n";
    for (const auto& r : rep.discounted.rows)
      if (r.x0_index == xi) gd << fmt(r.delta) << ' ' << fmt(r.lambda_hat) << '\n';
  }
  for (std::size_t xi = 0; xi < cfg.x0s.size(); ++xi) {
    if (xi) gt << "\n\n";
    for (const auto& r : rep.longtime.rows)
      if (r.x0_index == xi) gt << fmt(r.t) << ' ' << fmt(r.u_hat) << '\n';
  }
  o.gnuplot.emplace_back("delta", gd.str());
  o.gnuplot.emplace_back("time", gt.str());
  o.summary = "ergodic: verdict " + to_string(rep.verdict) + ", lambda invariant=" + fmt(rep.lambda_invariant.value) +
              " discounted=" + fmt(rep.lambda_discounted.value) + " cauchy=" + fmt(rep.lambda_cauchy.value) +
              " time_average=" + fmt(rep.lambda_time_average.value);
  return o;
}

Outcome run_hormander(const RunConfig& c) {
  const DiffusionModel model = model_from(c);
  const Vec x = c.point.empty() ? Vec(Vec::Zero(model.dim())) : to_vec(c.point);
  if (x.size() != model.dim()) throw DimensionError("point dimension does not match the model");
  const HormanderRank h = hormander_rank(model, x, c.order);
  Outcome o;
  o.result = {{"rank", h.rank}, {"spanning", h.spanning}, {"dim", model.dim()}, {"generators", h.generators}};
  o.exit_code = h.spanning ? kExitPass : kExitFail;
  o.summary = "rank " + std::to_string(h.rank) + ", spanning=" + (h.spanning ? "true" : "false");
  return o;
}

Outcome run_calibrate(const RunConfig& c) {
  const DriftSpec drift = parse_drift(c.drift);
  if (drift.kind != DriftKind::ou) throw ConfigError("calibrate needs an ou drift");
  const double gamma = drift.gamma;
  const int d = 3;
  const DiffusionModel model = build_ou_identity(gamma, d);
  auto [kind, kv] = parse_kv_spec(c.f);
  if (kind != "gauss") throw ConfigError("calibrate needs a gauss observable");
  const double s = take(kv, "s", 1.0);
  const double a = take(kv, "a", 1.0);
  const ScalarField f = parse_observable(c.f, d);
  const double lambda = gauss_expectation(a, s, 1.0 / gamma, d);
  const EstimatorOptions opt = estimator_options(c);
  const Vec origin = Vec::Zero(d);

  Outcome o;
  bool fail = false, inconclusive = false;
  json checks = json::array();
  auto band = [&](const std::string& name, const Estimate& e, double target, double tol) {
    const bool pass = std::abs(e.value - target) <= tol;
    fail = fail || !pass;
    checks.push_back({{"name", name}, {"value", e.value}, {"se", e.se}, {"target", target}, {"tolerance", tol}, {"pass", pass}});
  };

  // Discounted, extrapolated to delta = 0.
  DiscountedConfig dcfg;
  dcfg.deltas = c.deltas;
  dcfg.x0s = {origin};
  dcfg.options = opt;
  const DiscountedTable dt = lambda_discounted(model, f, dcfg);
  const Estimate ext = dt.extrapolated.front();
  band("discounted_extrapolated", ext, lambda, std::max(3.0 * ext.se, 0.01));
  inconclusive = inconclusive || dt.inconclusive;

  // Cauchy problem at every t against the exact transient law N(0, (1 - e^{-2 gamma t}) / gamma).
  CauchyConfig ccfg;
  ccfg.times = c.times;
  ccfg.x0s = {origin};
  ccfg.options = opt;
  const LongTimeTable lt = lambda_longtime(model, f, ccfg);
  for (const auto& r : lt.rows) {
    const double v = -std::expm1(-2.0 * gamma * r.t) / gamma;
    band("cauchy_t=" + fmt(r.t), {r.u_hat, r.u_se}, gauss_expectation(a, s, v, d), 3.0 * r.u_se + c.abs_tol);
  }
  inconclusive = inconclusive || lt.inconclusive;

  TimeAverageConfig tcfg;
  tcfg.x0 = origin;
  tcfg.T = c.long_T;
  tcfg.burn = c.long_burn;
  tcfg.dt = c.dt;
  tcfg.record_stride = c.stride;
  tcfg.seed = c.seed;
  tcfg.stream = kLongRunStream;
  const TimeAverageResult ta = lambda_time_average(model, f, tcfg);
  band("time_average", ta.estimate, lambda, 3.0 * ta.estimate.se + c.abs_tol);
  inconclusive = inconclusive || ta.blew_up;

  // Weak order of the integrator, retried once with a larger ensemble.
  WeakErrorConfig wcfg;
  wcfg.gamma = gamma;
  wcfg.x0 = make_vec({1.0, 1.0, 1.0});
  wcfg.seed = c.seed;
  wcfg.workers = c.workers;
  WeakErrorResult w = weak_error_probe(wcfg);
  bool retried = false;
  if (w.inconclusive) {
    wcfg.M *= 4;
    w = weak_error_probe(wcfg);
    retried = true;
  }
  const bool ratio_ok = w.ratio >= 1.6 && w.ratio <= 2.4;
  if (w.inconclusive) {
    inconclusive = true;
  } else if (!ratio_ok) {
    fail = true;
  }
  checks.push_back({{"name", "weak_order_ratio"},
                    {"value", w.ratio},
                    {"error_coarse", w.error_coarse},
                    {"error_fine", w.error_fine},
                    {"se_coarse", w.se_coarse},
                    {"se_fine", w.se_fine},
                    {"retried", retried},
                    {"inconclusive", w.inconclusive},
                    {"pass", ratio_ok && !w.inconclusive}});

  const WeakErrorResult self = exact_sampler_error(wcfg);
  const bool self_ok = self.error_coarse <= 3.0 * self.se_coarse;
  fail = fail || !self_ok;
  checks.push_back({{"name", "exact_sampler_self_test"}, {"value", self.error_coarse}, {"se", self.se_coarse}, {"pass", self_ok}});

  o.result = {{"lambda_exact", lambda}, {"checks", checks}, {"delta_rows", json::array()}};
  for (const auto& r : dt.rows) o.result["delta_rows"].push_back({{"delta", r.delta}, {"lambda_hat", r.lambda_hat}, {"se", r.se}});
  o.csv = delta_sweep_csv(dt);
  o.exit_code = fail ? kExitFail : (inconclusive ? kExitInconclusive : kExitPass);
  o.summary = std::string("calibrate: ") + (fail ? "fail" : inconclusive ? "inconclusive" : "pass") +
              ", lambda exact=" + fmt(lambda) + " extrapolated=" + fmt(ext.value) + " (se " + fmt(ext.se) +
              "), weak ratio=" + fmt(w.ratio);
  return o;
}

Outcome run(const RunConfig& c) {
  if (c.workers < 0) throw ConfigError("workers must be >= 0");
  if (c.subcommand == "lyapunov") return run_lyapunov(c);
  if (c.subcommand == "simulate") return run_simulate(c);
  if (c.subcommand == "invariant") return run_invariant(c);
  if (c.subcommand == "sweep-rho") return run_sweep_rho(c);
  if (c.subcommand == "ergodic") return run_ergodic(c);
  if (c.subcommand == "hormander") return run_hormander(c);
  if (c.subcommand == "calibrate") return run_calibrate(c);
  throw ConfigError("unknown subcommand '" + c.subcommand + "'");
}

json make_report(const RunConfig& c, const Outcome& o, double seconds, const std::string& started_at) {
  return {{"config", c},
          {"version", kVersion},
          {"started_at", started_at},
          {"timings", {{"wall_seconds", seconds}}},
          {"exit_code", o.exit_code},
          {"result", o.result}};
}

// ---------------------------------------------------------------------------
// Command line

namespace {

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write '" + path + "'");
  os << text;
  if (!os) throw ConfigError("write failed for '" + path + "'");
}

void check_writable(const std::string& path) {
  if (path.empty()) return;
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty() && !std::filesystem::is_directory(parent)) {
    throw ConfigError("output directory does not exist for '" + path + "'");
  }
}

std::string find_config_arg(int argc, const char* const* argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return argv[i + 1];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return "";
}

void add_options(CLI::App& sub, RunConfig& c, std::string& config_path, const std::string& name) {
  sub.add_option("--config", config_path, "JSON config file; flags override its values");
  sub.add_option("--model", c.model, "heisenberg, grushin, lions-musiela or ou");
  sub.add_option("--drift", c.drift, "zero | ou:gamma=G | power:C=c1,c2,..;alpha=A;R=R");
  sub.add_option("--rho", c.rho, "regularization strength (0 = degenerate model)");
  sub.add_option("--seed", c.seed, "master seed (default: $ERGO_SEED or 42)");
  sub.add_option("--workers", c.workers, "worker threads (0 = all cores)");
  sub.add_option("--json", c.json, "JSON report path");
  sub.add_option_function<std::string>("--x0", [&c](const std::string& s) { c.x0 = parse_points(s); },
                                        "start points, e.g. \"0,0,0;2,0,0\"");
  if (name == "lyapunov") {
    sub.add_option("--rmin", c.rmin);
    sub.add_option("--rmax", c.rmax);
    sub.add_option("--shells", c.shells);
    sub.add_option("--samples", c.samples, "points per shell");
    sub.add_option("--sampling", c.sampling, "low-discrepancy or grid");
    sub.add_flag("--find-r0,!--no-find-r0", c.find_r0, "bisect for the minimal R0");
  }
  if (name == "simulate" || name == "invariant" || name == "sweep-rho" || name == "ergodic" || name == "calibrate") {
    sub.add_option("--dt", c.dt);
    sub.add_option("--stride", c.stride, "record every k-th step");
  }
  if (name == "simulate" || name == "invariant" || name == "sweep-rho") sub.add_option("--stream", c.stream);
  if (name == "simulate") {
    sub.add_option("--steps", c.steps);
    sub.add_option("--out", c.out, "ERGT trajectory path");
  }
  if (name == "invariant" || name == "sweep-rho") {
    sub.add_option("--T", c.T, "horizon");
    sub.add_option("--burn", c.burn, "burn-in time");
    sub.add_option_function<std::string>("--tail-radii", [&c](const std::string& s) { c.tail_radii = parse_list(s); });
    sub.add_option("--residual-tol", c.residual_tol);
    sub.add_option("--tail-tol", c.tail_tol);
  }
  if (name == "invariant") sub.add_option("--in", c.in, "read an ERGT trajectory instead of simulating");
  if (name == "sweep-rho") {
    sub.add_option_function<std::string>("--rhos", [&c](const std::string& s) { c.rhos = parse_list(s); });
    sub.add_option("--ks-tol", c.ks_tol);
  }
  if (name == "ergodic" || name == "calibrate") {
    sub.add_option("--f", c.f, "observable: gauss:s=S[;a=A] | const:c=C");
    sub.add_option_function<std::string>("--deltas", [&c](const std::string& s) { c.deltas = parse_list(s); });
    sub.add_option_function<std::string>("--times", [&c](const std::string& s) { c.times = parse_list(s); });
    sub.add_option("--M", c.M, "paths per start point");
    sub.add_option("--eps-tail", c.eps_tail);
    sub.add_option("--abs-tol", c.abs_tol);
    sub.add_option("--long-T", c.long_T, "horizon of the single-path runs");
    sub.add_option("--long-burn", c.long_burn);
  }
  if (name == "sweep-rho" || name == "ergodic" || name == "calibrate") {
    sub.add_option("--csv", c.csv, "CSV table path");
    sub.add_option("--gnuplot", c.gnuplot, "prefix for two-column .dat files");
  }
  if (name == "hormander") {
    sub.add_option_function<std::string>("--point", [&c](const std::string& s) { c.point = parse_list(s); });
    sub.add_option("--order", c.order, "maximum bracket order");
  }
}

}  // namespace

int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig c;
  try {
    if (const char* env = std::getenv("ERGO_SEED"); env && *env) {
      try {
        std::size_t used = 0;
        c.seed = std::stoull(env, &used);
        if (used != std::string(env).size()) throw std::invalid_argument(env);
      } catch (const std::exception&) {
        throw ConfigError(std::string("ERGO_SEED is not an unsigned integer: ") + env);
      }
    }
    const std::string config_path = find_config_arg(argc, argv);
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      if (!is) throw ConfigError("cannot read config '" + config_path + "'");
      json j;
      try {
        is >> j;
      } catch (const json::exception& e) {
        throw ConfigError("malformed config '" + config_path + "': " + e.what());
      }
      from_json(j, c);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  CLI::App app{"ergo: ergodic diagnostics for hypoelliptic diffusions"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  const std::vector<std::pair<std::string, std::string>> subs{
      {"lyapunov", "sampled verification of L w >= 1 on spherical shells"},
      {"simulate", "Euler-Maruyama path to an ERGT file"},
      {"invariant", "occupation-measure diagnostics"},
      {"sweep-rho", "regularization sweep against the degenerate model"},
      {"ergodic", "cross-check of the four ergodic-constant estimators"},
      {"hormander", "rank of the bracket-generated distribution at a point"},
      {"calibrate", "full pipeline on the Ornstein-Uhlenbeck calibration model"}};
  std::string config_seen;
  for (const auto& [name, help] : subs) add_options(*app.add_subcommand(name, help), c, config_seen, name);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  c.subcommand = app.get_subcommands().front()->get_name();

  try {
    check_writable(c.json);
    check_writable(c.csv);
    check_writable(c.out);
    check_writable(c.gnuplot);
    const std::string started = utc_now();
    const auto t0 = std::chrono::steady_clock::now();
    const Outcome o = run(c);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out << o.summary << '\n';
    if (!c.json.empty()) write_text(c.json, make_report(c, o, seconds, started).dump(2) + "\n");
    if (!c.csv.empty() && !o.csv.empty()) write_text(c.csv, o.csv);
    if (!c.gnuplot.empty()) {
      for (const auto& [suffix, text] : o.gnuplot) write_text(c.gnuplot + "_" + suffix + ".dat", text);
    }
    return o.exit_code;
  } catch (const BlowUpError& e) {
    err << "inconclusive: " << e.what() << '\n';
    return kExitInconclusive;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace ergo::cli
