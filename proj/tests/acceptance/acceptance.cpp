// Acceptance runner: one PASS/FAIL line per criterion. Usage: acceptance [1 2 ...]
// (no arguments runs all ten). Exit status is non-zero if any selected criterion fails.

#include "ergo/calculus.hpp"
#include "ergo/cli.hpp"
#include "ergo/ergodic.hpp"
#include "ergo/lyapunov.hpp"
#include "ergo/measure.hpp"
#include "ergo/sde.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace ergo;
namespace fs = std::filesystem;

namespace {

struct Result {
  bool pass = false;
  std::string detail;
};

std::string num(double v, int prec = 6) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

std::string est(const Estimate& e) { return num(e.value) + " +- " + num(e.se, 2); }

ScalarField gauss3() { return gaussian_field(3, 1.0); }

DiffusionModel heisenberg_ou(double rho = 0.0) { return build_model("heisenberg", DriftSpec::ou(1.0), rho); }

// Minimum radius beyond which L w >= 1 holds on every sphere, from the closed form reduced
// to s = x1^2 + x2^2 (even split minimizes the quartic): min_s s^2/6 - 6 s + r^2 - rho^2.
double oracle_r0(double rho) { return std::sqrt(55.0 + rho * rho); }

Result c1() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::ostringstream d;
  for (double rho : {0.0, 0.01, 0.1}) {
    LyapunovCandidate cand{canonical_w("heisenberg"), heisenberg_ou(rho), 1.0};
    ShellScanConfig cfg;
    cfg.r_min = 6;
    cfg.r_max = 60;
    cfg.shells = 55;
    cfg.samples_per_shell = 512;
    const auto rep = scan_shells(cand, cfg);
    ShellScanConfig fine = cfg;
    fine.shells = 1081;  // resolution 0.05
    const double r0 = find_min_R0(cand, fine);
    const bool zero_viol = rep.violation_count == 0;
    const bool r0_ok = std::abs(r0 - 5.5) <= 0.2;
    ok = ok && zero_viol && r0_ok;
    double worst_r = 0;
    for (const auto& s : rep.shells)
      if (s.violations) worst_r = std::max(worst_r, s.r);
    d << "rho=" << rho << ": violations=" << rep.violation_count;
    if (!zero_viol) d << " (outermost violating shell r=" << worst_r << ")";
    d << ", min_R0=" << num(r0, 4) << " vs target 5.5+-0.2, analytic sqrt(55+rho^2)=" << num(oracle_r0(rho), 4)
      << "; ";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ok = ok && secs < 10;
  d << "runtime " << num(secs, 3) << " s";
  return {ok, d.str()};
}

Result c2() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto model = heisenberg_ou();
  const ScalarField w = canonical_w("heisenberg");
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-20, 20);
  double worst = 0;
  for (int k = 0; k < 10000; ++k) {
    const double x1 = u(rng), x2 = u(rng), x3 = u(rng);
    // Written out independently: -5(x1^2+x2^2) - (b1 x1^3 + b2 x2^3)/3 - b3 x3 with b = -x.
    const double formula = -5 * (x1 * x1 + x2 * x2) + (x1 * x1 * x1 * x1 + x2 * x2 * x2 * x2) / 3 + x3 * x3;
    const double got = apply_elliptic_L(model, w, make_vec({x1, x2, x3})).elliptic_L;
    worst = std::max(worst, std::abs(got - formula));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {worst <= 1e-10 && secs < 1,
          "max |L w - formula| = " + num(worst, 3) + " over 1e4 points, runtime " + num(secs, 3) + " s"};
}

EstimatorOptions budget() {
  EstimatorOptions o;
  o.M = 20000;
  o.dt = 1e-3;
  o.seed = 42;
  o.eps_tail = 0.1;
  o.workers = 0;
  return o;
}

Result c3() {
  const auto t0 = std::chrono::steady_clock::now();
  DiscountedConfig cfg;
  cfg.deltas = {0.4, 0.2, 0.1, 0.05};
  cfg.x0s = {Vec::Zero(3)};
  cfg.options = budget();
  const auto t = lambda_discounted(build_ou_identity(1.0, 3), gauss3(), cfg);
  const double lambda = std::pow(2.0, -1.5);
  const Estimate e = t.extrapolated[0];
  const double band = std::max(3 * e.se, 0.01);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ostringstream d;
  d << "extrapolated " << est(e) << " vs " << num(lambda) << " (|diff| " << num(std::abs(e.value - lambda), 3)
    << ", band " << num(band, 3) << "); sweep:";
  for (const auto& r : t.rows) d << " d=" << r.delta << ":" << num(r.lambda_hat, 5);
  d << "; runtime " << num(secs, 4) << " s";
  return {std::abs(e.value - lambda) <= band && !t.inconclusive && secs < 300, d.str()};
}

Result c4() {
  const auto t0 = std::chrono::steady_clock::now();
  ErgodicConfig cfg;
  cfg.x0s = {Vec::Zero(3)};
  cfg.options = budget();
  cfg.times = {5, 10, 20, 50};
  const auto r = cross_estimator_report(heisenberg_ou(), gauss3(), cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  bool rel_ok = true;
  std::ostringstream d;
  d << "invariant " << est(r.lambda_invariant) << ", discounted " << est(r.lambda_discounted) << ", cauchy(t=50) "
    << est(r.lambda_cauchy) << ", time_average " << est(r.lambda_time_average) << "; max pair diff ";
  double worst = 0, worst_rel = 0;
  for (const auto& c : r.comparisons) {
    worst = std::max(worst, std::abs(c.difference));
    const double rel = std::abs(c.difference) / std::abs(r.lambda_invariant.value);
    worst_rel = std::max(worst_rel, rel);
    if (rel > 0.05) rel_ok = false;
  }
  d << num(worst, 3) << " (" << num(100 * worst_rel, 3) << "%); verdict " << to_string(r.verdict);
  for (const auto& n : r.notes) d << "; " << n;
  d << "; runtime " << num(secs, 4) << " s";
  return {r.verdict == Verdict::pass && rel_ok && secs < 600, d.str()};
}

Result c5() {
  const auto t0 = std::chrono::steady_clock::now();
  DiscountedConfig cfg;
  cfg.deltas = {0.4, 0.2, 0.1, 0.05};
  cfg.x0s = {make_vec({0, 0, 0}), make_vec({2, 0, 0}), make_vec({0, 2, 0}), make_vec({0, 0, 2}),
             make_vec({1, -1, 1})};
  cfg.options = budget();
  const auto t = lambda_discounted(heisenberg_ou(), gauss3(), cfg);
  std::vector<std::vector<std::vector<double>>> s(cfg.deltas.size());
  for (std::size_t j = 0; j < cfg.deltas.size(); ++j)
    for (const auto& pf : t.samples) s[j].push_back(pf.column_delta(j));
  const auto rep = constancy_diagnostic(cfg.deltas, s, 0.005);
  // Extrapolated values are reported alongside; the criterion is on the raw sweep.
  const auto ext = constancy_diagnostic({0.0}, std::vector<std::vector<Estimate>>{t.extrapolated}, 0.005);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::ostringstream d;
  d << "spread(delta):";
  for (const auto& l : rep.levels) d << " " << l.level << ":" << num(l.spread, 3) << "+-" << num(l.combined_se, 2);
  d << "; decreasing=" << (rep.decreasing ? "yes" : "no") << ", final within 3SE+0.005="
    << (rep.final_pass ? "yes" : "no") << "; extrapolated spread " << num(ext.levels[0].spread, 3) << "+-"
    << num(ext.levels[0].combined_se, 2) << "; runtime " << num(secs, 4) << " s";
  return {rep.pass(), d.str()};
}

Result c6() {
  SimConfig sim;
  sim.dt = 1e-3;
  sim.steps = 200000;
  sim.x0 = Vec::Zero(3);
  sim.seed = 42;
  sim.record_stride = 1;
  const auto model = heisenberg_ou();
  const auto tr = simulate_path(model, sim, 0);
  const auto m = occupation_measure(tr, 20.0, 1);
  const auto rep = adjoint_residual(model, m, default_dictionary(3), 1e-3);
  std::ostringstream d;
  double worst = 0;
  for (const auto& e : rep.entries) {
    worst = std::max(worst, std::abs(e.residual) / (3 * e.se + 1e-3));
    if (!e.pass) d << e.name << "=" << num(e.residual, 3) << "+-" << num(e.se, 2) << " ";
  }
  d << "max |residual|/(3SE+1e-3) = " << num(worst, 3) << " over " << rep.entries.size() << " fields, "
    << m.size() << " samples";
  return {rep.all_pass() && rep.entries.size() == 9 && !tr.blew_up, d.str()};
}

Result c7() {
  SimConfig sim;
  sim.dt = 1e-2;
  sim.steps = 1000;
  sim.record_stride = 1000;
  sim.x0 = Vec::Zero(3);
  sim.seed = 42;
  const auto ens = simulate_ensemble(heisenberg_ou(), sim, 100000, 0);
  const auto m = ensemble_snapshot_measure(ens, 10.0);
  const double ks1 = ks_marginal(m, 0, normal_cdf), ks2 = ks_marginal(m, 1, normal_cdf);
  const auto x3 = integrate_with_se(m, [](const Vec& x) { return x[2]; });
  const bool ok = ks1 <= 0.02 && ks2 <= 0.02 && std::abs(x3.value) <= 3 * x3.se;
  return {ok, "KS(x1)=" + num(ks1, 3) + ", KS(x2)=" + num(ks2, 3) + ", mean(x3)=" + est(x3) + " at 1e5 samples"};
}

Result c8() {
  SweepConfig cfg;
  cfg.x0 = Vec::Zero(3);
  cfg.T = 2000;
  cfg.burn = 20;
  cfg.dt = 1e-3;
  cfg.record_stride = 10;
  cfg.tail_radii = {10.0};
  cfg.workers = 0;
  const auto t = rho_sweep_study("heisenberg", DriftSpec::ou(1.0), {1.0, 0.5, 0.25, 0.1}, cfg);
  const auto v = cli::judge_sweep(t, 0.05, 0.01);
  std::ostringstream d;
  for (const auto& r : t.rows) {
    d << "rho=" << r.rho << ": maxKS=" << num(r.to_baseline.max_ks, 3) << " tail=" << num(r.tails.tail_mass[0], 3)
      << "; ";
  }
  d << "ks_final=" << v.ks_final << " trend=" << v.trend << " tails=" << v.tails;
  return {v.pass(), d.str()};
}

Result c9() {
  WeakErrorConfig wc;
  wc.x0 = make_vec({1, 1, 1});
  wc.workers = 0;
  auto w = weak_error_probe(wc);
  std::ostringstream d;
  if (w.inconclusive) {
    d << "first probe inconclusive (M=" << wc.M << "), retried with 4M; ";
    wc.M *= 4;
    w = weak_error_probe(wc);
  }
  const bool ratio_ok = !w.inconclusive && w.ratio >= 1.6 && w.ratio <= 2.4;
  d << "ratio " << num(w.ratio, 4) << " (errors " << num(w.error_coarse, 3) << ", " << num(w.error_fine, 3) << ")";

  // Pathwise |delta u_delta| <= sup|f| and |u(t)| <= sup|f| on every path of every model.
  std::size_t viol = 0, checked = 0;
  PathFunctionalConfig pc;
  pc.deltas = {0.4, 0.1, 0.05};
  pc.times = {1, 5, 20};
  pc.M = 2000;
  pc.dt = 1e-2;  // the bounds hold path by path at any step size
  pc.workers = 0;
  const std::vector<std::pair<DiffusionModel, ScalarField>> runs{
      {heisenberg_ou(), gauss3()},
      {heisenberg_ou(0.1), gaussian_field(3, 2.0, -0.7)},
      {build_model("grushin", DriftSpec::ou(1.0), 0.0), gaussian_field(2, 1.0)},
      {build_model("lions-musiela", DriftSpec::power({2, 2}, 1.5), 0.0), gaussian_field(2, 0.5)},
      {build_ou_identity(1.0, 3), gauss3()}};
  for (const auto& [model, f] : runs) {
    const Vec x0 = Vec::Constant(model.dim(), 0.5);
    const auto pf = sample_path_functionals(model, f, x0, pc);
    viol += pf.discount_bound_violations + pf.cauchy_bound_violations;
    const double sup = pf.f_sup * (1 + 1e-12);
    for (double v : pf.delta_u) viol += std::abs(v) > sup;
    for (double v : pf.f_at) viol += std::abs(v) > sup;
    for (double v : pf.v_over_t) viol += std::abs(v) > sup;
    checked += pf.delta_u.size() + pf.f_at.size() + pf.v_over_t.size();
  }
  d << "; pathwise bound violations " << viol << " of " << checked << " checks";
  return {ratio_ok && viol == 0, d.str()};
}

// ----- determinism -----

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(ERGO_BINARY) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

Result c10() {
  std::ostringstream d;
  bool ok = true;
  // Library level.
  {
    SimConfig sim;
    sim.dt = 1e-2;
    sim.steps = 500;
    sim.record_stride = 10;
    sim.x0 = make_vec({1, 1, 1});
    const auto a = simulate_ensemble(heisenberg_ou(0.1), sim, 200, 1);
    const auto b = simulate_ensemble(heisenberg_ou(0.1), sim, 200, 8);
    bool same = a.size() == b.size();
    for (std::size_t i = 0; same && i < a.size(); ++i) same = a.paths[i].states == b.paths[i].states;
    PathFunctionalConfig pc;
    pc.deltas = {0.4, 0.2};
    pc.times = {1, 2};
    pc.M = 300;
    pc.dt = 1e-2;
    pc.workers = 1;
    const auto pa = sample_path_functionals(heisenberg_ou(), gauss3(), std::vector<Vec>{Vec::Zero(3), Vec::Ones(3)}, pc);
    pc.workers = 8;
    const auto pb = sample_path_functionals(heisenberg_ou(), gauss3(), std::vector<Vec>{Vec::Zero(3), Vec::Ones(3)}, pc);
    for (std::size_t i = 0; i < 2; ++i)
      same = same && pa[i].delta_u == pb[i].delta_u && pa[i].f_at == pb[i].f_at && pa[i].v_over_t == pb[i].v_over_t;
    d << "library ensemble/functionals " << (same ? "identical" : "DIFFER") << "; ";
    ok = ok && same;
  }
  // CLI level: every subcommand at workers 1 and 4, results, CSVs and trajectories compared byte for byte.
  const fs::path dir = fs::temp_directory_path() / ("ergo_accept_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::vector<std::pair<std::string, std::string>> cmds{
      {"lyapunov", "lyapunov --rmin 4 --rmax 20 --shells 17 --samples 128"},
      {"simulate", "simulate --steps 2000 --stride 10 --x0 1,1,1"},
      {"invariant", "invariant --T 20 --burn 2"},
      {"sweep-rho", "sweep-rho --T 20 --burn 2 --rhos 1,0.5"},
      {"ergodic", "ergodic --M 200 --dt 0.01 --deltas 0.4,0.2 --times 1,2 --long-T 50 --long-burn 5 "
                  "--x0 \"0,0,0;1,1,1\""},
      {"hormander", "hormander --point 0,0,0 --order 2"},
      {"calibrate", "calibrate --M 200 --dt 0.01 --deltas 0.4,0.2 --times 1,2 --long-T 50 --long-burn 5"}};
  for (const auto& [name, args] : cmds) {
    std::string outs[2];
    int codes[2];
    for (int k = 0; k < 2; ++k) {
      const std::string tag = (dir / (name + std::to_string(k))).string();
      std::string extra = " --json " + tag + ".json";
      if (name == "simulate") extra += " --out " + tag + ".ergt";
      if (name == "sweep-rho" || name == "ergodic" || name == "calibrate") extra += " --csv " + tag + ".csv";
      codes[k] = run_cli(args + " --seed 7 --workers " + (k ? "4" : "1") + extra);
      auto j = nlohmann::json::parse(slurp(tag + ".json"));
      outs[k] = j["result"].dump() + "|" + std::to_string(j["exit_code"].get<int>()) + "|" + slurp(tag + ".csv") +
                "|" + slurp(tag + ".ergt");
    }
    const bool same = codes[0] == codes[1] && outs[0] == outs[1];
    ok = ok && same;
    d << name << (same ? " ok" : " DIFFER") << " ";
  }
  fs::remove_all(dir);
  return {ok, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<std::string, std::function<Result()>> all{{"c1", c1}, {"c2", c2}, {"c3", c3}, {"c4", c4},
                                                           {"c5", c5}, {"c6", c6}, {"c7", c7}, {"c8", c8},
                                                           {"c9", c9}, {"c10", c10}};
  std::vector<std::string> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    selected.push_back(a.front() == 'c' ? a : "c" + a);
  }
  if (selected.empty()) selected = {"c1", "c2", "c3", "c4", "c5", "c6", "c7", "c8", "c9", "c10"};
  int failures = 0;
  for (const auto& name : selected) {
    const auto it = all.find(name);
    if (it == all.end()) {
      std::cerr << "unknown criterion " << name << '\n';
      return 1;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Result r;
    try {
      r = it->second();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "criterion " << name.substr(1) << ": " << (r.pass ? "PASS" : "FAIL") << "  " << r.detail << "  ["
              << num(secs, 4) << " s]" << std::endl;
    failures += !r.pass;
  }
  return failures == 0 ? 0 : 1;
}
