// Python bindings: a scenario object exposing the main library operations.

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cqm/errors.hpp"
#include "cqm/scenario.hpp"
#include "cqm/solver.hpp"

namespace py = pybind11;
using namespace cqm;

namespace {

struct PyScenario {
  std::shared_ptr<const Scenario> s;

  const GeometryBundle& b() const { return s->bundle; }
  int dim() const { return s->bundle.dim(); }
  Grid grid() const { return Grid(s->bundle.chart); }
  double t0() const { return s->bundle.chart.t0; }
  double k_or(std::optional<double> k) const { return k.value_or(s->k_factor); }

  const SpecialQuadratic& fn(const std::string& name) const {
    auto it = s->functions.find(name);
    if (it == s->functions.end()) throw ConfigError("undefined function '" + name + "'", "");
    return it->second;
  }

  WaveFunction wave(const CVec& values, std::optional<double> t) const {
    const Grid g = grid();
    if (values.size() != g.size())
      throw DimensionError("expected " + std::to_string(g.size()) + " grid values, got " +
                           std::to_string(values.size()));
    return {g, t.value_or(t0()), values};
  }
};

Mat grid_points(const PyScenario& p) {
  const Grid g = p.grid();
  Mat out(g.size(), g.dim());
  for (std::ptrdiff_t k = 0; k < g.size(); ++k) out.row(k) = g.point(k).transpose();
  return out;
}

Mat trajectory(const PyScenario& p, const Vec& x0, const Vec& v0, double t_end, int steps) {
  const Trajectory traj = integrate_newton(build_gamma(p.b()), p.b().chart, {p.t0(), x0, v0}, t_end, steps);
  const int n = p.dim();
  Mat out(static_cast<Eigen::Index>(traj.size()), 1 + 2 * n);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto r = static_cast<Eigen::Index>(k);
    out(r, 0) = traj[k].t;
    out.row(r).segment(1, n) = traj[k].x.transpose();
    out.row(r).segment(1 + n, n) = traj[k].v.transpose();
  }
  return out;
}

py::dict report_dict(const RunReport& r) {
  py::list tasks;
  for (const auto& t : r.tasks) {
    py::list checks;
    for (const auto& c : t.checks)
      checks.append(py::dict(py::arg("name") = c.name, py::arg("value") = c.value,
                             py::arg("tolerance") = c.tolerance, py::arg("passed") = c.passed()));
    tasks.append(py::dict(py::arg("id") = t.id, py::arg("type") = t.type, py::arg("csv") = t.csv,
                          py::arg("passed") = t.passed(), py::arg("error") = t.error, py::arg("checks") = checks));
  }
  return py::dict(py::arg("exit_code") = r.exit_code, py::arg("out_dir") = r.out_dir.string(),
                  py::arg("tasks") = tasks);
}

}  // namespace

PYBIND11_MODULE(_cqm, m) {
  m.doc() = "Covariant quantum mechanics workbench";

  static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
  static py::exception<ConfigError> config_error(m, "ConfigError", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      config_error(e.what());
    } catch (const Error& e) {
      error(e.what());
    }
  });

  m.def("fnv1a", [](const py::bytes& b) { return fnv1a(std::string(b)); }, "FNV-1a 64 hash of a byte string");

  py::class_<PyScenario>(m, "Scenario")
      .def_static("load", [](const std::filesystem::path& path) { return PyScenario{std::make_shared<Scenario>(load_scenario(path))}; },
                  py::arg("path"))
      .def_static("parse", [](const std::string& text) { return PyScenario{std::make_shared<Scenario>(parse_scenario(text))}; },
                  py::arg("text"))
      .def_property_readonly("dim", &PyScenario::dim)
      .def_property_readonly("k_factor", [](const PyScenario& p) { return p.s->k_factor; })
      .def_property_readonly("config_hash", [](const PyScenario& p) { return p.s->config_hash; })
      .def_property_readonly("functions", [](const PyScenario& p) {
        std::vector<std::string> names;
        for (const auto& [name, f] : p.s->functions) names.push_back(name);
        return names;
      })
      .def_property_readonly("tasks", [](const PyScenario& p) {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& t : p.s->tasks) out.emplace_back(t.id, t.type);
        return out;
      })
      .def("grid_points", &grid_points, "grid nodes, one row per node")
      .def("validate", [](const PyScenario& p, int samples) {
        ValidationOptions vo;
        vo.samples_per_axis = samples;
        std::map<std::string, double> out;
        for (const auto& [name, value] : validate_geometry(p.b(), vo).rows()) out[name] = value;
        return out;
      }, py::arg("samples") = 5)
      .def("trajectory", &trajectory, py::arg("x0"), py::arg("v0"), py::arg("t_end"), py::arg("steps") = 1000,
           "RK4 motion; rows are (t, x..., v...)")
      .def("bracket", [](const PyScenario& p, const std::string& f, const std::string& g, double t, const Vec& x,
                         const Vec& v) { return special_bracket_at(p.fn(f), p.fn(g), p.b(), {t, x, v}); },
           py::arg("f"), py::arg("g"), py::arg("t"), py::arg("x"), py::arg("v"))
      .def("classify", [](const PyScenario& p, const std::string& f) {
        const Classification c = classify(p.fn(f), p.b().chart);
        return py::dict(py::arg("quantisable") = c.quantisable, py::arg("constant_time") = c.constant_time,
                        py::arg("affine") = c.affine, py::arg("spacetime") = c.spacetime);
      }, py::arg("f"))
      .def("apply_operator", [](const PyScenario& p, const std::string& f, const CVec& psi, int order,
                                std::optional<double> k) {
        return quantum_operator(p.fn(f), p.b(), p.k_or(k), {order, p.t0()}).apply(psi);
      }, py::arg("f"), py::arg("psi"), py::arg("order") = 2, py::arg("k") = py::none())
      .def("hermiticity_residual", [](const PyScenario& p, const std::string& f, const CVec& a, const CVec& b,
                                      std::optional<double> k) {
        return quantum_operator(p.fn(f), p.b(), p.k_or(k), {2, p.t0()}).hermiticity_residual(a, b);
      }, py::arg("f"), py::arg("a"), py::arg("b"), py::arg("k") = py::none())
      .def("norm", [](const PyScenario& p, const CVec& psi, std::optional<double> t) { return norm(p.wave(psi, t), p.b()); },
           py::arg("psi"), py::arg("t") = py::none())
      .def("expectation", [](const PyScenario& p, const std::string& f, const CVec& psi, std::optional<double> k) {
        double imag = 0.0;
        const double re = expectation(quantum_operator(p.fn(f), p.b(), p.k_or(k), {2, p.t0()}), p.wave(psi, {}), p.b(), &imag);
        return Complex(re, imag);
      }, py::arg("f"), py::arg("psi"), py::arg("k") = py::none())
      .def("evolve", [](const PyScenario& p, const CVec& psi0, double t_end, int steps, int order,
                        std::optional<double> k) {
        EvolutionConfig cfg;
        cfg.t_start = p.t0();
        cfg.t_end = t_end;
        cfg.steps = steps;
        cfg.order = order;
        py::gil_scoped_release release;
        return evolve(p.wave(psi0, {}), p.b(), p.k_or(k), cfg).values;
      }, py::arg("psi0"), py::arg("t_end"), py::arg("steps"), py::arg("order") = 2, py::arg("k") = py::none(),
           "Crank-Nicolson from the chart's t0; returns the final slice")
      .def("spectrum", [](const PyScenario& p, int modes, const std::string& f, int order, std::optional<double> k) {
        SpectrumOptions opts;
        opts.order = order;
        opts.t = p.t0();
        const SpectrumResult r = spectrum(p.fn(f), p.b(), p.k_or(k), modes, opts);
        Eigen::MatrixXcd states(static_cast<Eigen::Index>(r.eigenstates.size()), p.grid().size());
        for (std::size_t i = 0; i < r.eigenstates.size(); ++i)
          states.row(static_cast<Eigen::Index>(i)) = r.eigenstates[i].values.transpose();
        return py::make_tuple(r.eigenvalues, r.residuals, states);
      }, py::arg("modes"), py::arg("f") = "H0", py::arg("order") = 2, py::arg("k") = py::none(),
           "(eigenvalues, residuals, states) with one state per row")
      .def("commutator", [](const PyScenario& p, const std::string& f, const std::string& g, const Vec& centre,
                            const Vec& momentum, double width, double energy, std::optional<double> k) {
        const SpacetimeWave psi = [=](double t, const Vec& x) {
          const double phase = momentum.dot(x) - energy * t;
          return std::exp(-(x - centre).squaredNorm() / (4.0 * width * width)) * Complex(std::cos(phase), std::sin(phase));
        };
        CommutatorOptions opts;
        opts.t = p.t0();
        const CommutatorReport r = commutator_check(p.fn(f), p.fn(g), psi, p.b(), p.k_or(k), opts);
        return py::dict(py::arg("residual") = r.residual, py::arg("lhs_scale") = r.lhs_scale,
                        py::arg("obstruction_scale") = r.obstruction_scale,
                        py::arg("obstruction_active") = r.obstruction_active);
      }, py::arg("f"), py::arg("g"), py::arg("centre"), py::arg("momentum"), py::arg("width"),
           py::arg("energy") = 0.0, py::arg("k") = py::none(), "Gaussian test packet, see the scenario format")
      .def("run", [](const PyScenario& p, const std::filesystem::path& out, const std::string& profile,
                     std::optional<double> k, bool validate_only) {
        RunOptions opts;
        opts.out_dir = out;
        opts.tolerance_profile = profile;
        opts.k_override = k;
        opts.validate_only = validate_only;
        RunReport r;
        {
          py::gil_scoped_release release;
          r = run_scenario(*p.s, opts);
        }
        return report_dict(r);
      }, py::arg("out_dir"), py::arg("tolerance_profile") = "strict", py::arg("k") = py::none(),
           py::arg("validate_only") = false);
}
