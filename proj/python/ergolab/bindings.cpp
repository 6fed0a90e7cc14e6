#include "ergo/calculus.hpp"
#include "ergo/cli.hpp"
#include "ergo/lyapunov.hpp"
#include "ergo/sde.hpp"
#include "ergo/trajectory_io.hpp"
#include "ergo/version.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace ergo;

namespace {

py::object to_py(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

nlohmann::json from_py(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

Vec as_vec(const std::vector<double>& v) { return cli::to_vec(v); }

DiffusionModel make_model(const std::string& model, const std::string& drift, double rho) {
  return build_model(model, cli::parse_drift(drift), rho);
}

py::array_t<double> states_array(const Trajectory& t) {
  py::array_t<double> out({static_cast<py::ssize_t>(t.size()), static_cast<py::ssize_t>(t.dim)});
  std::copy(t.states.begin(), t.states.end(), out.mutable_data());
  return out;
}

}  // namespace

PYBIND11_MODULE(_ergolab, m) {
  m.doc() = "Ergodic diagnostics for degenerate diffusions";
  m.attr("__version__") = kVersion;

  // Translators are tried newest first, so the base class goes in before its subclasses.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<std::string> full{"ergo"};
        full.insert(full.end(), args.begin(), args.end());
        std::vector<const char*> argv;
        for (const auto& a : full) argv.push_back(a.c_str());
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = cli::parse_and_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run the ergo command line in-process; returns (exit_code, stdout, stderr).");

  m.def(
      "run",
      [](const py::dict& config) {
        cli::RunConfig c;
        cli::from_json(from_py(config), c);
        cli::Outcome o;
        {
          py::gil_scoped_release release;
          o = cli::run(c);
        }
        return to_py(cli::make_report(c, o, 0.0, ""));
      },
      py::arg("config"), "Run one subcommand from a config dict; returns the JSON report as a dict.");

  m.def(
      "elliptic_L",
      [](const std::string& model, const std::string& drift, double rho, const std::vector<double>& x) {
        const auto mdl = make_model(model, drift, rho);
        return apply_elliptic_L(mdl, canonical_w(mdl.kind()), as_vec(x)).elliptic_L;
      },
      py::arg("model"), py::arg("drift") = "ou:gamma=1", py::arg("rho") = 0.0, py::arg("x"),
      "L w at x for the model's canonical Lyapunov candidate w.");

  m.def(
      "find_min_r0",
      [](const std::string& model, const std::string& drift, double rho, double rmin, double rmax, int shells,
         int samples) {
        const auto mdl = make_model(model, drift, rho);
        ShellScanConfig cfg;
        cfg.r_min = rmin;
        cfg.r_max = rmax;
        cfg.shells = shells;
        cfg.samples_per_shell = samples;
        py::gil_scoped_release release;
        return find_min_R0({canonical_w(mdl.kind()), mdl, 1.0}, cfg);
      },
      py::arg("model") = "heisenberg", py::arg("drift") = "ou:gamma=1", py::arg("rho") = 0.0, py::arg("rmin") = 1.0,
      py::arg("rmax") = 60.0, py::arg("shells") = 590, py::arg("samples") = 512);

  m.def(
      "hormander_rank",
      [](const std::string& model, const std::vector<double>& point, int order, double rho) {
        const auto r = ergo::hormander_rank(make_model(model, "zero", rho), as_vec(point), order);
        return py::dict(py::arg("rank") = r.rank, py::arg("spanning") = r.spanning,
                        py::arg("generators") = r.generators);
      },
      py::arg("model"), py::arg("point"), py::arg("order") = 2, py::arg("rho") = 0.0);

  m.def(
      "simulate",
      [](const std::string& model, const std::string& drift, double rho, const std::vector<double>& x0, double dt,
         std::uint64_t steps, std::uint64_t seed, std::uint64_t stream, std::uint64_t stride) {
        const auto mdl = make_model(model, drift, rho);
        SimConfig cfg;
        cfg.dt = dt;
        cfg.steps = steps;
        cfg.x0 = as_vec(x0);
        cfg.seed = seed;
        cfg.record_stride = stride;
        Trajectory t;
        {
          py::gil_scoped_release release;
          t = simulate_path(mdl, cfg, stream);
        }
        return py::make_tuple(states_array(t), t.blew_up);
      },
      py::arg("model"), py::arg("drift") = "ou:gamma=1", py::arg("rho") = 0.0, py::arg("x0"), py::arg("dt") = 1e-3,
      py::arg("steps") = 1000, py::arg("seed") = 42, py::arg("stream") = 0, py::arg("stride") = 1,
      "Euler-Maruyama path; returns (states[count, dim], blew_up).");

  m.def(
      "read_trajectory",
      [](const std::string& path) {
        const Trajectory t = ergo::read_trajectory(path);
        return py::make_tuple(states_array(t), py::dict(py::arg("spacing") = t.dt, py::arg("seed") = t.seed,
                                                        py::arg("stream") = t.stream));
      },
      py::arg("path"), "Load an ERGT file; returns (states, {spacing, seed, stream}).");

  m.def(
      "normals",
      [](std::uint64_t seed, std::uint64_t stream, std::uint64_t step, int count) {
        if (count < 1 || count > kMaxNoise) throw ConfigError("normals: count out of range");
        NoiseVec xi(count);
        NormalStream(seed, stream).fill(step, count, xi);
        return std::vector<double>(xi.data(), xi.data() + count);
      },
      py::arg("seed"), py::arg("stream"), py::arg("step"), py::arg("count"));

  m.def(
      "weak_error_probe",
      [](std::vector<double> x0, double dt, std::size_t M, std::uint64_t seed) {
        WeakErrorConfig cfg;
        cfg.x0 = as_vec(x0);
        cfg.dt = dt;
        cfg.M = M;
        cfg.seed = seed;
        WeakErrorResult r;
        {
          py::gil_scoped_release release;
          r = ergo::weak_error_probe(cfg);
        }
        return py::dict(py::arg("ratio") = r.ratio, py::arg("error_coarse") = r.error_coarse,
                        py::arg("error_fine") = r.error_fine, py::arg("inconclusive") = r.inconclusive);
      },
      py::arg("x0"), py::arg("dt") = 0.02, py::arg("M") = 100000, py::arg("seed") = 7);
}
