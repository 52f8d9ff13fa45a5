#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "cqm/scenario.hpp"
#include "cqm/solver.hpp"
#include "scenario_json.hpp"

namespace cqm {

using detail::Json;

bool TaskOutcome::passed() const {
  if (!error.empty()) return false;
  for (const auto& c : checks)
    if (!c.passed()) return false;
  return true;
}

std::filesystem::path default_output_dir() {
  const char* env = std::getenv("CQM_OUTPUT_DIR");
  return (env && *env) ? std::filesystem::path(env) : std::filesystem::path("cqm-out");
}

namespace {

struct Tolerances {
  double geometry, closure, trajectory, bracket, hermiticity, commutator, norm_drift, observable, spectrum;
};

Tolerances profile(const std::string& name) {
  if (name == "strict") return {1e-8, 1e-6, 1e-6, 1e-6, 1e-8, 1e-6, 1e-10, 1e-3, 1e-3};
  if (name == "grid") return {1e-6, 1e-4, 1e-4, 1e-4, 1e-6, 1e-4, 1e-8, 1e-2, 1e-2};
  throw ConfigError("unknown tolerance profile '" + name + "' (strict, grid)", "--tolerance-profile");
}

// Shortest round-trip decimal form, so outputs are byte-stable and exact.
std::string num(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

class Csv {
 public:
  Csv(const std::filesystem::path& path, const std::vector<std::string>& columns) : out_(path, std::ios::binary) {
    if (!out_) throw Error("cannot write " + path.string());
    out_ << "# cqm-csv v1\n";
    row(columns);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

struct Context {
  const Scenario& s;
  const Json& task;
  std::string path;  // field path of the task, for late config errors
  std::filesystem::path dir;
  double k;
  Tolerances tol;
  TaskOutcome& outcome;

  const GeometryBundle& b() const { return s.bundle; }
  int n() const { return s.bundle.dim(); }
  double tolerance(double fallback) const { return detail::number_or(task, "tolerance", fallback, path); }
  const SpecialQuadratic& fn(const std::string& name) const { return s.functions.at(name); }
  Csv csv(const std::vector<std::string>& columns) {
    outcome.csv = outcome.id + ".csv";
    return Csv(dir / outcome.csv, columns);
  }
  void check(const std::string& name, double value, double tolerance) {
    outcome.checks.push_back({name, value, tolerance});
  }
};

std::vector<std::string> axis_names(const std::string& prefix, int n) {
  std::vector<std::string> out;
  for (int a = 1; a <= n; ++a) out.push_back(prefix + std::to_string(a));
  return out;
}

SpacetimeWave packet_wave(const detail::PacketSpec& p) {
  return [p](double t, const Vec& x) {
    const Vec d = x - p.centre;
    const double phase = p.momentum.dot(x) - p.energy * t;
    return std::exp(-d.squaredNorm() / (4.0 * p.width * p.width)) * Complex(std::cos(phase), std::sin(phase));
  };
}

WaveFunction normalised_packet(const Context& c, const detail::PacketSpec& p, double t) {
  WaveFunction psi = WaveFunction::sample(packet_wave(p), Grid(c.b().chart), t);
  const double nn = norm(psi, c.b());
  if (!(nn > 0.0)) throw ConfigError("test state vanishes on the grid", c.path);
  psi.values /= nn;
  return psi;
}

// Deterministic packets spread over the chart, used when a task names none.
std::vector<detail::PacketSpec> default_packets(const FibredChart& chart) {
  std::vector<detail::PacketSpec> out;
  double span = 1e300;
  for (const auto& [lo, hi] : chart.extent) span = std::min(span, hi - lo);
  const double offsets[3] = {0.0, 0.1, -0.12};
  for (int s = 0; s < 3; ++s) {
    detail::PacketSpec p;
    p.centre.resize(chart.n);
    p.momentum.resize(chart.n);
    for (int a = 0; a < chart.n; ++a) {
      const auto& [lo, hi] = chart.extent[static_cast<std::size_t>(a)];
      p.centre[a] = 0.5 * (lo + hi) + offsets[s] * (hi - lo) * (a % 2 ? -1.0 : 1.0);
      p.momentum[a] = s * (a + 1.0);
    }
    p.width = 0.07 * span;
    out.push_back(p);
  }
  return out;
}

void task_validate(Context& c) {
  ValidationOptions vo;
  vo.samples_per_axis = detail::int_or(c.task, "samples", 5, c.path);
  const GeometryResiduals r = validate_geometry(c.b(), vo);

  const CosymplecticForm omega = build_omega(c.b());
  std::vector<PhasePoint> pts;
  const int n = c.n();
  Vec v1 = Vec::Constant(n, 0.5), v2(n);
  for (int a = 0; a < n; ++a) v2[a] = a % 2 ? 0.7 : -0.3;
  for (const Vec& x : interior_samples(c.b().chart, detail::int_or(c.task, "closure_samples", 3, c.path)))
    for (const Vec& v : {Vec(Vec::Zero(n)), v1, v2}) pts.push_back({c.b().chart.t0, x, v});
  const double closure = omega_closure_residual(omega, pts);

  Csv csv = c.csv({"check", "value"});
  for (const auto& [name, value] : r.rows()) csv.row({name, num(value)});
  csv.row({"omega_closure", num(closure)});
  c.check("geometry", r.worst(), c.tolerance(c.tol.geometry));
  c.check("omega_closure", closure, detail::number_or(c.task, "closure_tolerance", c.tol.closure, c.path));
}

void task_trajectory(Context& c) {
  const int n = c.n();
  const PhasePoint start{c.b().chart.t0, detail::as_vec(c.task["x0"], c.path + ".x0", n),
                         detail::as_vec(c.task["v0"], c.path + ".v0", n)};
  const double t_end = detail::as_number(c.task["t_end"], c.path + ".t_end");
  const int steps = detail::int_or(c.task, "steps", 1000, c.path);
  const int every = std::max(1, detail::int_or(c.task, "every", 1, c.path));
  const Trajectory traj = integrate_newton(build_gamma(c.b()), c.b().chart, start, t_end, steps);
  const PhaseFunction h0 = c.fn("H0").on(c.b());

  std::vector<std::string> cols{"step", "t"};
  for (auto& s : axis_names("x", n)) cols.push_back(s);
  for (auto& s : axis_names("v", n)) cols.push_back(s);
  cols.push_back("H0");
  Csv csv = c.csv(cols);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (k % static_cast<std::size_t>(every) && k + 1 != traj.size()) continue;
    const PhasePoint& p = traj[k];
    std::vector<std::string> row{std::to_string(k), num(p.t)};
    for (int a = 0; a < n; ++a) row.push_back(num(p.x[a]));
    for (int a = 0; a < n; ++a) row.push_back(num(p.v[a]));
    row.push_back(num(h0(p)));
    csv.row(row);
  }
  if (c.task.contains("expect_final")) {
    const Json& e = c.task["expect_final"];
    const std::string ep = c.path + ".expect_final";
    const double tol = c.tolerance(c.tol.trajectory);
    if (e.contains("x"))
      c.check("final_x", (traj.back().x - detail::as_vec(e["x"], ep + ".x", n)).cwiseAbs().maxCoeff(), tol);
    if (e.contains("v"))
      c.check("final_v", (traj.back().v - detail::as_vec(e["v"], ep + ".v", n)).cwiseAbs().maxCoeff(), tol);
  }
}

void task_brackets(Context& c) {
  const int n = c.n();
  const double t = c.b().chart.t0;
  Vec v(n);
  for (int a = 0; a < n; ++a) v[a] = 0.5 / (a + 1.0) * (a % 2 ? -1.0 : 1.0);
  std::vector<PhasePoint> pts;
  for (const Vec& x : interior_samples(c.b().chart, detail::int_or(c.task, "samples", 3, c.path)))
    pts.push_back({t, x, v});

  std::vector<std::string> cols{"f", "g", "t"};
  for (auto& s : axis_names("x", n)) cols.push_back(s);
  for (auto& s : axis_names("v", n)) cols.push_back(s);
  cols.insert(cols.end(), {"value", "quadratic_residual"});
  Csv csv = c.csv(cols);

  const double tol = c.tolerance(c.tol.bracket);
  double worst_fit = 0.0;
  const Json& pairs = c.task["pairs"];
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::string fname = pairs[i][0], gname = pairs[i][1];
    const auto& f = c.fn(fname);
    const auto& g = c.fn(gname);
    const bool expect = c.task.contains("expect") && !c.task["expect"][i].is_null();
    const double target =
        expect ? detail::as_number(c.task["expect"][i], detail::index(c.path + ".expect", i)) : 0.0;
    double dev = 0.0;
    for (const PhasePoint& p : pts) {
      const double value = special_bracket_at(f, g, c.b(), p);
      const double fit = bracket_extraction_residual(f, g, c.b(), p.t, p.x);
      worst_fit = std::max(worst_fit, fit);
      dev = std::max(dev, std::abs(value - target));
      std::vector<std::string> row{fname, gname, num(p.t)};
      for (int a = 0; a < n; ++a) row.push_back(num(p.x[a]));
      for (int a = 0; a < n; ++a) row.push_back(num(p.v[a]));
      row.insert(row.end(), {num(value), num(fit)});
      csv.row(row);
    }
    if (expect) c.check("[[" + fname + "," + gname + "]]", dev, tol);
  }
  c.check("quadratic_residual", worst_fit, tol);
}

void task_operators(Context& c) {
  const int order = detail::int_or(c.task, "order", 2, c.path);
  const double t = c.b().chart.t0;
  std::vector<detail::PacketSpec> specs;
  if (c.task.contains("states")) {
    for (std::size_t i = 0; i < c.task["states"].size(); ++i)
      specs.push_back(detail::parse_packet(c.task["states"][i], detail::index(c.path + ".states", i), c.n()));
  } else {
    specs = default_packets(c.b().chart);
  }
  std::vector<WaveFunction> states;
  for (const auto& p : specs) states.push_back(normalised_packet(c, p, t));

  Csv csv = c.csv({"operator", "state", "kind", "value"});
  double worst = 0.0;
  for (const auto& name : c.task["functions"]) {
    const std::string fname = name.get<std::string>();
    const QuantumOperator op = quantum_operator(c.fn(fname), c.b(), c.k, {order, t});
    for (std::size_t s = 0; s < states.size(); ++s) {
      const WaveFunction& a = states[s];
      const WaveFunction& partner = states[(s + 1) % states.size()];
      const double herm = op.hermiticity_residual(a.values, partner.values);
      worst = std::max(worst, herm);
      double imag = 0.0;
      const double re = expectation(op, a, c.b(), &imag);
      const std::string id = std::to_string(s);
      csv.row({fname, id, "hermiticity", num(herm)});
      csv.row({fname, id, "expectation", num(re)});
      csv.row({fname, id, "expectation_imag", num(imag)});
    }
  }
  c.check("hermiticity", worst, c.tolerance(c.tol.hermiticity));
}

void task_commutators(Context& c) {
  const auto packet = detail::parse_packet(c.task["state"], c.path + ".state", c.n());
  const SpacetimeWave psi = packet_wave(packet);
  CommutatorOptions opts;
  opts.t = c.b().chart.t0;
  opts.margin = detail::int_or(c.task, "margin", opts.margin, c.path);

  Csv csv = c.csv({"f", "g", "residual", "lhs_scale", "obstruction_scale", "obstruction_active", "samples"});
  double worst = 0.0;
  for (const auto& pair : c.task["pairs"]) {
    const std::string fname = pair[0], gname = pair[1];
    const CommutatorReport r = commutator_check(c.fn(fname), c.fn(gname), psi, c.b(), c.k, opts);
    worst = std::max(worst, r.residual);
    csv.row({fname, gname, num(r.residual), num(r.lhs_scale), num(r.obstruction_scale),
             r.obstruction_active ? "1" : "0", std::to_string(r.samples)});
  }
  c.check("commutator", worst, c.tolerance(c.tol.commutator));
}

// Observables of one slice: <x_a>, <P_a>, <f>, width.
struct Moments {
  Vec x, p;
  double h = 0.0, width = 0.0;
};

Moments moments(const Context& c, const WaveFunction& psi, const SpecialQuadratic& f, int order) {
  const int n = c.n();
  Moments m;
  m.x = Vec::Zero(n);
  m.p = Vec::Zero(n);
  const Vec w = node_density(c.b(), psi.grid, psi.t);
  Vec x2 = Vec::Zero(n);
  double total = 0.0;
  for (std::ptrdiff_t k = 0; k < psi.grid.size(); ++k) {
    const double rho = w[k] * std::norm(psi.values[k]);
    const Vec x = psi.grid.point(k);
    total += rho;
    m.x += rho * x;
    x2 += rho * x.cwiseProduct(x);
  }
  m.x /= total;
  x2 /= total;
  m.width = std::sqrt(std::max(0.0, (x2 - m.x.cwiseProduct(m.x)).sum()));
  // The observables are measured with the operators of the slice's instant.
  for (int a = 0; a < n; ++a)
    m.p[a] = expectation(quantum_operator(builtin::momentum(c.b(), a), c.b(), c.k, {order, psi.t}), psi, c.b());
  m.h = expectation(quantum_operator(f, c.b(), c.k, {order, psi.t}), psi, c.b());
  return m;
}

void task_evolve(Context& c) {
  const int n = c.n();
  const auto packet = detail::parse_packet(c.task["state"], c.path + ".state", n);
  EvolutionConfig cfg;
  cfg.t_start = c.b().chart.t0;
  cfg.t_end = detail::as_number(c.task["t_end"], c.path + ".t_end");
  cfg.steps = c.task["steps"].get<int>();
  cfg.order = detail::int_or(c.task, "order", 2, c.path);
  const int every = std::max(1, detail::int_or(c.task, "every", 1, c.path));
  const int dump_every = detail::int_or(c.task, "dump_every", 0, c.path);
  const SpecialQuadratic& f = c.fn(detail::string_or(c.task, "function", "H0", c.path));

  const WaveFunction psi0 = normalised_packet(c, packet, cfg.t_start);
  const double rim = boundary_mass(psi0, c.b(), 5);
  if (rim > 1e-10)
    std::cerr << "warning: task " << c.outcome.id << ": initial mass within 5 cells of the walls is " << num(rim)
              << "\n";

  std::vector<std::string> cols{"step", "t", "norm"};
  for (auto& s : axis_names("x", n)) cols.push_back(s);
  for (auto& s : axis_names("p", n)) cols.push_back(s);
  cols.insert(cols.end(), {"H", "width"});
  Csv csv = c.csv(cols);

  const std::filesystem::path slices = c.dir / (c.outcome.id + "_slices");
  if (dump_every > 0) std::filesystem::create_directories(slices);

  const double norm0 = norm(psi0, c.b());
  double drift = 0.0;
  Moments last;
  cfg.observer = [&](int step, const WaveFunction& psi) {
    const double nn = norm(psi, c.b());
    drift = std::max(drift, std::abs(nn - norm0));
    if (dump_every > 0 && step % dump_every == 0) {
      char name[32];
      std::snprintf(name, sizeof name, "step_%06d.bin", step);
      write_slice(slices / name, psi);
    }
    if (step % every && step != cfg.steps) return;
    last = moments(c, psi, f, cfg.order);
    std::vector<std::string> row{std::to_string(step), num(psi.t), num(nn)};
    for (int a = 0; a < n; ++a) row.push_back(num(last.x[a]));
    for (int a = 0; a < n; ++a) row.push_back(num(last.p[a]));
    row.insert(row.end(), {num(last.h), num(last.width)});
    csv.row(row);
  };
  evolve(psi0, c.b(), c.k, cfg);

  // The drift bound is stated per 1000 steps.
  const double per = std::max(1.0, cfg.steps / 1000.0);
  c.check("norm_drift", drift, c.tolerance(c.tol.norm_drift) * per);
  if (c.task.contains("expect_final")) {
    const Json& e = c.task["expect_final"];
    const std::string ep = c.path + ".expect_final";
    const double tol = detail::number_or(c.task, "observable_tolerance", c.tol.observable, c.path);
    if (e.contains("width"))
      c.check("final_width", std::abs(last.width - detail::as_number(e["width"], ep + ".width")), tol);
    if (e.contains("x")) c.check("final_x", (last.x - detail::as_vec(e["x"], ep + ".x", n)).cwiseAbs().maxCoeff(), tol);
    if (e.contains("p")) c.check("final_p", (last.p - detail::as_vec(e["p"], ep + ".p", n)).cwiseAbs().maxCoeff(), tol);
  }
}

void task_spectrum(Context& c) {
  const int modes = c.task["modes"].get<int>();
  SpectrumOptions opts;
  opts.order = detail::int_or(c.task, "order", 2, c.path);
  opts.t = c.b().chart.t0;
  opts.cluster_tol = detail::number_or(c.task, "cluster_tolerance", opts.cluster_tol, c.path);
  const SpecialQuadratic& f = c.fn(detail::string_or(c.task, "function", "H0", c.path));
  const SpectrumResult r = spectrum(f, c.b(), c.k, modes, opts);

  Csv csv = c.csv({"mode", "eigenvalue", "residual"});
  for (std::size_t i = 0; i < r.eigenvalues.size(); ++i)
    csv.row({std::to_string(i), num(r.eigenvalues[i]), num(r.residuals[i])});

  if (c.task.contains("expect")) {
    const Json& e = c.task["expect"];
    double worst = 0.0;
    for (std::size_t i = 0; i < e.size() && i < r.eigenvalues.size(); ++i) {
      const double want = e[i].get<double>();
      worst = std::max(worst, std::abs(r.eigenvalues[i] - want) / std::max(1e-300, std::abs(want)));
    }
    c.check("relative_eigenvalue_error", worst, c.tolerance(c.tol.spectrum));
  }
  if (c.task.contains("expect_multiplicities")) {
    const std::string mp = c.path + ".expect_multiplicities";
    const Json& e = detail::as_array(c.task["expect_multiplicities"], mp);
    std::vector<int> want;
    for (std::size_t i = 0; i < e.size(); ++i) want.push_back(detail::as_int(e[i], detail::index(mp, i)));
    std::vector<int> got = r.multiplicities(opts.cluster_tol);
    got.resize(std::min(got.size(), want.size()));
    c.check("multiplicities_mismatch", got == want ? 0.0 : 1.0, 0.0);
  }
}

int error_class(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ClassificationError*>(&e) ||
      dynamic_cast<const TestStateError*>(&e) || dynamic_cast<const DomainError*>(&e) ||
      dynamic_cast<const DimensionError*>(&e) || dynamic_cast<const StructuralError*>(&e))
    return 2;
  return 3;
}

void write_manifest(const Scenario& s, const RunOptions& opts, const Tolerances& tol, double k,
                    const RunReport& report) {
  using Ordered = nlohmann::ordered_json;
  char hash[24];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(s.config_hash));
  auto scalar = [](const units::ScaledScalar& v) {
    return Ordered{{"value", v.value}, {"tag", {v.tag.t_exp.str(), v.tag.l_exp.str(), v.tag.m_exp.str()}}};
  };
  Ordered chart{{"dim", s.bundle.chart.n},
                {"time_step", s.bundle.chart.time_step},
                {"t0", s.bundle.chart.t0}};
  for (std::size_t a = 0; a < s.bundle.chart.extent.size(); ++a) {
    chart["extent"].push_back({s.bundle.chart.extent[a].first, s.bundle.chart.extent[a].second});
    chart["points"].push_back(s.bundle.chart.points[a]);
  }
  Ordered m{{"cqm_csv_version", 1},
            {"config", std::filesystem::path(s.origin).filename().string()},
            {"config_hash", std::string("fnv1a64:") + hash},
            {"tolerance_profile", opts.tolerance_profile},
            {"tolerances",
             {{"geometry", tol.geometry},
              {"closure", tol.closure},
              {"trajectory", tol.trajectory},
              {"bracket", tol.bracket},
              {"hermiticity", tol.hermiticity},
              {"commutator", tol.commutator},
              {"norm_drift_per_1000_steps", tol.norm_drift},
              {"observable", tol.observable},
              {"spectrum_relative", tol.spectrum}}},
            {"k_factor", k},
            {"constants", {{"m", scalar(s.mass)}, {"q", scalar(s.charge)}, {"hbar", scalar(s.hbar)}}},
            {"chart", chart},
            {"tasks", Ordered::array()}};
  for (const auto& t : report.tasks) {
    Ordered entry{{"id", t.id}, {"type", t.type}, {"csv", t.csv},
                  {"status", !t.error.empty() ? "error" : (t.passed() ? "pass" : "fail")}};
    entry["checks"] = Ordered::array();
    for (const auto& chk : t.checks)
      entry["checks"].push_back(
          {{"name", chk.name}, {"value", chk.value}, {"tolerance", chk.tolerance}, {"passed", chk.passed()}});
    if (!t.error.empty()) entry["error"] = t.error;
    m["tasks"].push_back(entry);
  }
  m["exit_code"] = report.exit_code;
  std::ofstream out(report.out_dir / "manifest.json", std::ios::binary);
  out << m.dump(2) << '\n';
}

}  // namespace

RunReport run_scenario(const Scenario& s, const RunOptions& opts) {
  const Tolerances tol = profile(opts.tolerance_profile);
  const double k = opts.k_override.value_or(s.k_factor);

  RunReport report;
  report.out_dir = !opts.out_dir.empty()        ? opts.out_dir
                   : !s.output_dir.empty() ? std::filesystem::path(s.output_dir)
                                           : default_output_dir();
  std::filesystem::create_directories(report.out_dir);

  std::vector<ScenarioTask> tasks;
  for (const auto& t : s.tasks)
    if (!opts.validate_only || t.type == "validate") tasks.push_back(t);
  if (opts.validate_only && tasks.empty()) tasks.push_back({"validate", "validate", "{}"});

  bool config_error = false, numerical_error = false, assertion_failed = false;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const ScenarioTask& t = tasks[i];
    TaskOutcome outcome{t.id, t.type, "", {}, "", 0};
    const Json params = Json::parse(t.params);
    Context ctx{s, params, "task " + t.id, report.out_dir, k, tol, outcome};
    try {
      if (t.type == "validate") task_validate(ctx);
      else if (t.type == "trajectory") task_trajectory(ctx);
      else if (t.type == "brackets") task_brackets(ctx);
      else if (t.type == "operators") task_operators(ctx);
      else if (t.type == "commutators") task_commutators(ctx);
      else if (t.type == "evolve") task_evolve(ctx);
      else if (t.type == "spectrum") task_spectrum(ctx);
    } catch (const std::exception& e) {
      outcome.error = e.what();
      outcome.error_code = error_class(e);
    }
    if (outcome.error_code == 2) config_error = true;
    else if (outcome.error_code == 3) numerical_error = true;
    else if (!outcome.passed()) assertion_failed = true;
    report.tasks.push_back(std::move(outcome));
  }
  report.exit_code = config_error ? 2 : numerical_error ? 3 : assertion_failed ? 1 : 0;
  write_manifest(s, opts, tol, k, report);
  return report;
}

}  // namespace cqm
