#include <fstream>
#include <set>
#include <sstream>

#include "cqm/expression.hpp"
#include "cqm/scenario.hpp"
#include "scenario_json.hpp"

namespace cqm {

using detail::Json;
using detail::join;

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

const std::set<std::string> kTaskTypes = {"validate", "trajectory", "brackets",   "operators",
                                          "evolve",   "spectrum",   "commutators"};

Expression expr(const Json& j, const std::string& path, int n) {
  if (j.is_number()) return Expression::constant(j.get<double>());
  try {
    return Expression::parse(detail::as_string(j, path), n);
  } catch (const ConfigError& e) {
    if (e.where() == path) throw;
    throw ConfigError(e.what(), path);
  }
}

std::vector<Expression> expr_list(const Json& j, const std::string& path, int n, std::size_t count) {
  detail::as_array(j, path, count);
  std::vector<Expression> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(expr(j[i], detail::index(path, i), n));
  return out;
}

std::vector<std::vector<Expression>> expr_matrix(const Json& j, const std::string& path, int n, std::size_t rows) {
  detail::as_array(j, path, rows);
  std::vector<std::vector<Expression>> out;
  for (std::size_t i = 0; i < rows; ++i) out.push_back(expr_list(j[i], detail::index(path, i), n, rows));
  return out;
}

units::Rational rational(const Json& j, const std::string& path) {
  if (j.is_number_integer()) return {j.get<std::int64_t>()};
  if (j.is_string()) {
    try {
      return units::Rational::parse(j.get<std::string>());
    } catch (const Error& e) {
      throw ConfigError(e.what(), path);
    }
  }
  throw ConfigError("expected an integer or a rational string such as \"3/2\"", path);
}

units::ScaledScalar constant(const Json& obj, const std::string& key, units::ScaledScalar fallback,
                             const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  const std::string p = join(path, key);
  units::ScaledScalar s;
  s.value = detail::as_number(detail::require(*it, "value", p), join(p, "value"));
  const Json& tag = detail::as_array(detail::require(*it, "tag", p), join(p, "tag"), 3);
  s.tag = {rational(tag[0], join(p, "tag[0]")), rational(tag[1], join(p, "tag[1]")),
           rational(tag[2], join(p, "tag[2]"))};
  return s;
}

FibredChart parse_chart(const Json& j, const std::string& path) {
  FibredChart c;
  c.n = detail::as_int(detail::require(j, "dim", path), join(path, "dim"));
  if (c.n < 1 || c.n > 3) throw ConfigError("dim must be 1, 2 or 3", join(path, "dim"));
  const std::size_t n = static_cast<std::size_t>(c.n);

  const Json& ext = detail::require(j, "extent", path);
  const std::string ep = join(path, "extent");
  // A single [lo, hi] pair applies to every axis.
  const bool shared = ext.is_array() && ext.size() == 2 && ext[0].is_number();
  if (!shared) detail::as_array(ext, ep, n);
  for (std::size_t a = 0; a < n; ++a) {
    const Json& pair = shared ? ext : ext[a];
    const std::string pp = shared ? ep : detail::index(ep, a);
    detail::as_array(pair, pp, 2);
    c.extent.emplace_back(detail::as_number(pair[0], pp + "[0]"), detail::as_number(pair[1], pp + "[1]"));
  }

  const Json& pts = detail::require(j, "points", path);
  const std::string pp = join(path, "points");
  if (pts.is_number_integer()) {
    c.points.assign(n, pts.get<int>());
  } else {
    detail::as_array(pts, pp, n);
    for (std::size_t a = 0; a < n; ++a) c.points.push_back(detail::as_int(pts[a], detail::index(pp, a)));
  }
  c.time_step = detail::number_or(j, "time_step", 1e-3, path);
  c.t0 = detail::number_or(j, "t0", 0.0, path);
  try {
    c.check();
  } catch (const Error& e) {
    throw ConfigError(e.what(), path);
  }
  return c;
}

// Extra gravitational connection coefficients on top of the metric connection.
Connection sum_extra(const std::vector<std::tuple<int, int, int, Expression>>& extra, int n, double t,
                     const Vec& x) {
  Connection k(n);
  for (const auto& [l, h, m, e] : extra) k(l, h, m) += e(t, x);
  return k;
}

GeometryBundle parse_geometry(const Json& root, const FibredChart& chart, const units::ScaledScalar& mass,
                              const units::ScaledScalar& charge, const units::ScaledScalar& hbar) {
  const int n = chart.n;
  const std::size_t nn = static_cast<std::size_t>(n);
  const std::string path = "geometry";
  static const Json empty = Json::object();
  const Json& g = root.contains("geometry") ? root["geometry"] : empty;
  if (!g.is_object()) throw ConfigError("expected an object", path);

  BundleInputs in;
  in.chart = chart;
  in.fd_step = detail::number_or(g, "fd_step", 1e-3, path);

  MatrixField physical;
  if (g.contains("metric")) {
    physical = matrix_field(expr_matrix(g["metric"], join(path, "metric"), n, nn));
  } else {
    physical = [n](double, const Vec&) { return Mat(Mat::Identity(n, n)); };
  }
  try {
    in.metric = units::rescale_metric({physical, units::DimTag::length().pow(2)}, mass, hbar).field;
  } catch (const DimensionError& e) {
    throw ConfigError(e.what(), "constants");
  }

  if (g.contains("potential")) {
    in.potential = vector_field(expr_list(g["potential"], join(path, "potential"), n, nn + 1));
  }
  if (g.contains("newton_potential")) {
    in.newton_potential = expr(g["newton_potential"], join(path, "newton_potential"), n).as_field();
  }
  if (g.contains("em")) {
    const MatrixField f = matrix_field(expr_matrix(g["em"], join(path, "em"), n, nn + 1));
    try {
      in.em = units::rescale_em({f, units::em_field_tag()}, charge, hbar).field;
    } catch (const DimensionError& e) {
      throw ConfigError(e.what(), "constants");
    }
  }
  if (g.contains("connection")) {
    const std::string cp = join(path, "connection");
    const Json& list = detail::as_array(g["connection"], cp);
    std::vector<std::tuple<int, int, int, Expression>> extra;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string ep = detail::index(cp, i);
      const int l = detail::as_int(detail::require(list[i], "lambda", ep), join(ep, "lambda"));
      const int h = detail::as_int(detail::require(list[i], "h", ep), join(ep, "h"));
      const int m = detail::as_int(detail::require(list[i], "mu", ep), join(ep, "mu"));
      if (l < 0 || l > n || m < 0 || m > n) throw ConfigError("lambda and mu range over 0..n", ep);
      if (h < 1 || h > n) throw ConfigError("h ranges over 1..n", join(ep, "h"));
      extra.emplace_back(l, h - 1, m, expr(detail::require(list[i], "value", ep), join(ep, "value"), n));
    }
    ConnectionField base = levi_civita_connection(in.metric, in.fd_step, in.newton_potential);
    in.grav = [base, extra, n](double t, const Vec& x) { return base(t, x) + sum_extra(extra, n, t, x); };
  }
  return make_bundle(std::move(in));
}

void add_builtins(Scenario& s) {
  const int n = s.bundle.dim();
  s.functions.emplace("H0", builtin::hamiltonian(s.bundle));
  for (int j = 0; j < n; ++j) {
    s.functions.emplace("P" + std::to_string(j + 1), builtin::momentum(s.bundle, j));
    s.functions.emplace("x" + std::to_string(j + 1), builtin::coordinate(n, j));
  }
}

void parse_functions(const Json& root, Scenario& s) {
  if (!root.contains("functions")) return;
  const Json& fs = root["functions"];
  if (!fs.is_object()) throw ConfigError("expected an object of named functions", "functions");
  const int n = s.bundle.dim();
  for (auto it = fs.begin(); it != fs.end(); ++it) {
    const std::string path = join("functions", it.key());
    if (s.functions.count(it.key())) throw ConfigError("name clashes with a builtin function", path);
    if (!it->is_object()) throw ConfigError("expected {f0, fi, base}", path);
    for (auto k = it->begin(); k != it->end(); ++k)
      if (k.key() != "f0" && k.key() != "fi" && k.key() != "base")
        throw ConfigError("unknown field '" + k.key() + "'", path);
    const Expression f0 = it->contains("f0") ? expr((*it)["f0"], join(path, "f0"), n) : Expression::constant(0.0);
    const Expression base =
        it->contains("base") ? expr((*it)["base"], join(path, "base"), n) : Expression::constant(0.0);
    std::vector<Expression> fi(static_cast<std::size_t>(n), Expression::constant(0.0));
    if (it->contains("fi")) fi = expr_list((*it)["fi"], join(path, "fi"), n, static_cast<std::size_t>(n));
    s.functions.emplace(it.key(), SpecialQuadratic::from_fields(n, f0.as_field(), vector_field(fi), base.as_field()));
  }
}

void check_name(const Scenario& s, const Json& j, const std::string& path) {
  const std::string name = detail::as_string(j, path);
  if (!s.functions.count(name)) throw ConfigError("undefined function '" + name + "'", path);
}

void check_pairs(const Scenario& s, const Json& task, const std::string& path) {
  const std::string pp = join(path, "pairs");
  const Json& pairs = detail::as_array(detail::require(task, "pairs", path), pp);
  if (pairs.empty()) throw ConfigError("at least one pair is required", pp);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::string ip = detail::index(pp, i);
    detail::as_array(pairs[i], ip, 2);
    check_name(s, pairs[i][0], ip + "[0]");
    check_name(s, pairs[i][1], ip + "[1]");
  }
}

void check_task(const Scenario& s, const Json& task, const std::string& path, const std::string& type) {
  const int n = s.bundle.dim();
  if (task.contains("tolerance")) detail::as_number(task["tolerance"], join(path, "tolerance"));
  if (type == "trajectory") {
    detail::as_vec(detail::require(task, "x0", path), join(path, "x0"), n);
    detail::as_vec(detail::require(task, "v0", path), join(path, "v0"), n);
    detail::as_number(detail::require(task, "t_end", path), join(path, "t_end"));
    if (detail::int_or(task, "steps", 1000, path) < 1) throw ConfigError("steps must be positive", join(path, "steps"));
  } else if (type == "brackets") {
    check_pairs(s, task, path);
    if (task.contains("expect"))
      detail::as_array(task["expect"], join(path, "expect"), task["pairs"].size());
  } else if (type == "commutators") {
    check_pairs(s, task, path);
    detail::parse_packet(detail::require(task, "state", path), join(path, "state"), n);
  } else if (type == "operators") {
    const std::string fp = join(path, "functions");
    const Json& fs = detail::as_array(detail::require(task, "functions", path), fp);
    for (std::size_t i = 0; i < fs.size(); ++i) check_name(s, fs[i], detail::index(fp, i));
    if (task.contains("states")) {
      const std::string sp = join(path, "states");
      const Json& st = detail::as_array(task["states"], sp);
      for (std::size_t i = 0; i < st.size(); ++i) detail::parse_packet(st[i], detail::index(sp, i), n);
    }
  } else if (type == "evolve") {
    detail::parse_packet(detail::require(task, "state", path), join(path, "state"), n);
    detail::as_number(detail::require(task, "t_end", path), join(path, "t_end"));
    if (detail::as_int(detail::require(task, "steps", path), join(path, "steps")) < 1)
      throw ConfigError("steps must be positive", join(path, "steps"));
    if (task.contains("function")) check_name(s, task["function"], join(path, "function"));
  } else if (type == "spectrum") {
    if (detail::as_int(detail::require(task, "modes", path), join(path, "modes")) < 1)
      throw ConfigError("modes must be positive", join(path, "modes"));
    if (task.contains("function")) check_name(s, task["function"], join(path, "function"));
    if (task.contains("expect")) {
      const std::string ep = join(path, "expect");
      const Json& e = detail::as_array(task["expect"], ep);
      for (std::size_t i = 0; i < e.size(); ++i) detail::as_number(e[i], detail::index(ep, i));
    }
  }
}

void parse_tasks(const Json& root, Scenario& s) {
  if (!root.contains("tasks")) return;
  const Json& tasks = detail::as_array(root["tasks"], "tasks");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const std::string path = detail::index("tasks", i);
    const Json& t = tasks[i];
    const std::string type = detail::as_string(detail::require(t, "type", path), join(path, "type"));
    if (!kTaskTypes.count(type)) throw ConfigError("unknown task type '" + type + "'", join(path, "type"));
    std::string id = detail::string_or(t, "id", type + std::to_string(i + 1), path);
    if (id.empty() || id.find_first_of("/\\ ") != std::string::npos)
      throw ConfigError("ids must be non-empty and free of slashes and spaces", join(path, "id"));
    if (!ids.insert(id).second) throw ConfigError("duplicate task id '" + id + "'", join(path, "id"));
    check_task(s, t, path, type);
    s.tasks.push_back({id, type, t.dump()});
  }
}

// Byte offset (1-based, as reported by the JSON parser) to "line L col C".
std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + " col " + std::to_string(col);
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& origin) {
  Json root;
  try {
    root = Json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const Json::parse_error& e) {
    std::string msg = e.what();
    if (auto p = msg.find("syntax error"); p != std::string::npos) msg = msg.substr(p);
    throw ConfigError(msg, line_col(text, e.byte));
  }
  if (!root.is_object()) throw ConfigError("top level must be an object", "");

  static const std::set<std::string> known = {"constants", "chart", "geometry", "functions",
                                              "tasks",     "k_factor", "output_dir"};
  for (auto it = root.begin(); it != root.end(); ++it)
    if (!known.count(it.key())) throw ConfigError("unknown section '" + it.key() + "'", it.key());

  Scenario s;
  s.origin = origin;
  s.config_hash = fnv1a(text);
  static const Json empty = Json::object();
  const Json& c = root.contains("constants") ? root["constants"] : empty;
  if (!c.is_object()) throw ConfigError("expected an object", "constants");
  s.mass = constant(c, "m", s.mass, "constants");
  s.charge = constant(c, "q", s.charge, "constants");
  s.hbar = constant(c, "hbar", s.hbar, "constants");

  const FibredChart chart = parse_chart(detail::require(root, "chart", ""), "chart");
  s.bundle = parse_geometry(root, chart, s.mass, s.charge, s.hbar);
  s.k_factor = detail::number_or(root, "k_factor", 0.0, "");
  s.output_dir = detail::string_or(root, "output_dir", "", "");
  add_builtins(s);
  parse_functions(root, s);
  parse_tasks(root, s);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file", path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.string());
}

}  // namespace cqm
