#include <pybind11/iostream.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <iostream>

#include "thc/cli.hpp"
#include "thc/config.hpp"
#include "thc/diagnostics.hpp"
#include "thc/io.hpp"
#include "thc/operators.hpp"

namespace py = pybind11;
using namespace thc;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Fields cross the boundary as (nz, ny) arrays, row k = depth level.
Array to_array(const ScalarField& f) {
  const Grid& g = f.grid();
  Array a({g.nz, g.ny});
  std::copy(f.values().begin(), f.values().end(), a.mutable_data());
  return a;
}

ScalarField from_array(const Array& a, const Grid& g, BcKind bc) {
  if (a.ndim() != 2 || a.shape(0) != g.nz || a.shape(1) != g.ny)
    throw ValidationError("expected an array of shape (nz, ny) = (" + std::to_string(g.nz) + ", " +
                          std::to_string(g.ny) + ")");
  ScalarField f(g, bc);
  std::copy(a.data(), a.data() + a.size(), f.values().begin());
  return f;
}

py::dict state_dict(const State& s) {
  py::dict d;
  d["t"] = s.t;
  d["q"] = to_array(s.q);
  d["psi"] = to_array(s.psi);
  d["T"] = to_array(s.T);
  d["S"] = to_array(s.S);
  d["transformed"] = s.vars == Variables::Transformed;
  return d;
}

py::dict simulate(const std::string& config_text, bool with_series) {
  const RunConfig c = parse_config(config_text);
  const Setup s = config_setup(c);
  const auto k = derive_constants(s.params, s.grid, c.epsilon);
  std::vector<double> t, energy, salt;
  const State end = run(s, config_system(c), config_initial_state(c), c.t0, c.t1, [&](const Propagator& p) {
    if (!with_series) return;
    const auto e = energy_record(p.state(), p.eta() ? &*p.eta() : nullptr, k);
    t.push_back(p.state().t);
    energy.push_back(e.ts_energy + e.q_energy);
    salt.push_back(mean(p.state().S));
  });
  py::dict d = state_dict(end);
  if (with_series) {
    d["series_t"] = t;
    d["series_energy"] = energy;
    d["series_salinity_mean"] = salt;
  }
  return d;
}

}  // namespace

PYBIND11_MODULE(_thc, m) {
  m.doc() = "Stochastic thermohaline circulation simulator";
  m.attr("__version__") = kVersion;

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

  m.def("parse_config", [](const std::string& text) { return render_config(parse_config(text)); },
        py::arg("text"), "Validate a config and return its canonical text.");
  m.def(
      "constants",
      [](const std::string& text) {
        const RunConfig c = parse_config(text);
        const auto k = derive_constants(config_params(c), config_grid(c), c.epsilon);
        py::dict d;
        for (const auto& [name, v] : constants_table(k)) d[py::str(name)] = v;
        return d;
      },
      py::arg("config_text"), "Derived dissipativity constants as a dict.");
  m.def("simulate", &simulate, py::arg("config_text"), py::arg("series") = true,
        "Integrate from t0 to t1; returns the final state and per-step energy and salinity series.");
  m.def(
      "cocycle_check",
      [](const std::string& text, double s_time, double t_time, std::int64_t mis_shift) {
        const RunConfig c = parse_config(text);
        return cocycle_check(config_setup(c), config_system(c), config_initial_state(c), s_time, t_time, mis_shift)
            .max_difference;
      },
      py::arg("config_text"), py::arg("s"), py::arg("t"), py::arg("mis_shift") = 0);
  m.def(
      "ou_sample",
      [](const std::string& text, std::int64_t index) {
        const RunConfig c = parse_config(text);
        const Setup s = config_setup(c);
        return to_array(ou_stationary_sample(s.spectrum, s.params, s.grid, c.seed, index).eta);
      },
      py::arg("config_text"), py::arg("index") = 0, "Stationary Ornstein-Uhlenbeck field, keyed by index.");
  m.def(
      "jacobian",
      [](const Array& psi, const Array& f, double l, double d) {
        const auto r = psi.request();
        if (r.ndim != 2) throw ValidationError("expected 2-D arrays");
        const Grid g = make_grid(static_cast<int>(psi.shape(1)), static_cast<int>(psi.shape(0)), l, d);
        return to_array(
            arakawa_jacobian(from_array(psi, g, BcKind::DirichletZero), from_array(f, g, BcKind::NeumannZero)));
      },
      py::arg("psi"), py::arg("f"), py::arg("l") = 1.0, py::arg("d") = 1.0);
  m.def(
      "poisson_solve",
      [](const Array& q, double l, double d) {
        if (q.ndim() != 2) throw ValidationError("expected a 2-D array");
        const Grid g = make_grid(static_cast<int>(q.shape(1)), static_cast<int>(q.shape(0)), l, d);
        return to_array(poisson_solve_dirichlet(from_array(q, g, BcKind::DirichletZero), 1e-10));
      },
      py::arg("q"), py::arg("l") = 1.0, py::arg("d") = 1.0, "Dirichlet solve of lap psi = q.");
  m.def(
      "inner",
      [](const Array& a, const Array& b, double l, double d) {
        if (a.ndim() != 2) throw ValidationError("expected a 2-D array");
        const Grid g = make_grid(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), l, d);
        return inner(from_array(a, g, BcKind::NeumannZero), from_array(b, g, BcKind::NeumannZero));
      },
      py::arg("a"), py::arg("b"), py::arg("l") = 1.0, py::arg("d") = 1.0, "Trapezoid inner product.");
  m.def(
      "read_snapshot",
      [](const std::string& path, int ny, int nz, double l, double d) {
        return state_dict(read_snapshot_file(path, make_grid(ny, nz, l, d)));
      },
      py::arg("path"), py::arg("ny"), py::arg("nz"), py::arg("l") = 1.0, py::arg("d") = 1.0);
  m.def(
      "cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "thc");
        py::scoped_ostream_redirect out;
        py::scoped_estream_redirect err;
        return cli_main(args, std::cout, std::cerr);
      },
      py::arg("args"), "Run a command-line subcommand; returns the exit code.");
}
