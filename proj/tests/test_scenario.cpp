#include <fstream>
#include <sstream>

#include "cqm/errors.hpp"
#include "cqm/scenario.hpp"
#include "doctest.h"

using namespace cqm;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("cqm_test_scenario_" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string config_error(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

const char* kFree = R"({
  "chart": {"dim": 1, "extent": [[-5, 5]], "points": [255]},
  "tasks": [
    {"type": "trajectory", "x0": [0], "v0": [0.5], "t_end": 2, "steps": 100, "expect_final": {"x": [1]}},
    {"type": "spectrum", "modes": 2},
    {"type": "evolve", "state": {"centre": [0], "momentum": [1], "width": 0.5}, "t_end": 0.1, "steps": 20}
  ]
})";

}  // namespace

TEST_CASE("scenario parsing") {
  SUBCASE("defaults and builtins") {
    const Scenario s = parse_scenario(kFree);
    CHECK(s.bundle.dim() == 1);
    CHECK(s.k_factor == 0.0);
    CHECK(s.tasks.size() == 3);
    CHECK(s.tasks[0].id == "trajectory1");
    for (const char* name : {"H0", "P1", "x1"}) CHECK(s.functions.count(name) == 1);
    CHECK(s.bundle.metric(0.0, Vec::Zero(1))(0, 0) == 1.0);
  }

  SUBCASE("constants rescale the metric by m / hbar") {
    const Scenario s = parse_scenario(R"({
      "constants": {"m": {"value": 3, "tag": [0, 0, 1]}, "hbar": {"value": 1.5, "tag": ["-1", "2", "1"]}},
      "chart": {"dim": 2, "extent": [-1, 1], "points": 8},
      "geometry": {"metric": [["1 + x1^2", "0"], ["0", "1"]]}
    })");
    Vec x(2);
    x << 0.5, 0.0;
    CHECK(s.bundle.metric(0.0, x)(0, 0) == doctest::Approx(2.0 * 1.25));
    CHECK(s.bundle.metric(0.0, x)(1, 1) == doctest::Approx(2.0));
  }

  SUBCASE("mis-tagged constants are config errors") {
    CHECK(config_error(R"({"constants": {"m": {"value": 1, "tag": [0, 1, 0]}},
                           "chart": {"dim": 1, "extent": [[0, 1]], "points": [4]}})")
              .rfind("constants", 0) == 0);
  }

  SUBCASE("user functions") {
    const Scenario s = parse_scenario(R"({
      "chart": {"dim": 1, "extent": [[-1, 1]], "points": [8]},
      "functions": {"boost": {"fi": ["t"], "base": "-x1"}}
    })");
    const auto c = s.functions.at("boost").coefficients(2.0, Vec::Constant(1, 0.25));
    CHECK(c.f0 == 0.0);
    CHECK(c.fi[0] == 2.0);
    CHECK(c.base == -0.25);
  }

  SUBCASE("errors name the location") {
    CHECK(config_error("{\"chart\": {\"dim\": 1,\n \"extent\" [[0, 1]]}}").find("line 2") != std::string::npos);
    const std::string undefined = config_error(R"({"chart": {"dim": 1, "extent": [[0, 1]], "points": [4]},
      "tasks": [{"type": "commutators", "pairs": [["x1", "Q7"]], "state": {"centre": [0.5]}}]})");
    CHECK(undefined.find("tasks[0].pairs[0][1]") != std::string::npos);
    CHECK(undefined.find("'Q7'") != std::string::npos);
    CHECK(config_error(R"({"chart": {"dim": 1, "extent": [[0, 1]], "points": [4]},
      "functions": {"H0": {"base": "1"}}})").find("builtin") != std::string::npos);
    CHECK(config_error(R"({"chart": {"dim": 1, "extent": [[0, 1]], "points": [4]},
      "tasks": [{"type": "evolve", "state": {"centre": [0.5]}, "t_end": 1}]})").find("tasks[0]: missing required field 'steps'") != std::string::npos);
    CHECK(config_error(R"({"chart": {"dim": 1, "extent": [[0, 1]], "points": [4]},
      "geometry": {"potential": ["sin(", "0"]}})").find("geometry.potential[0]") != std::string::npos);
    CHECK(config_error(R"({"chart": {"dim": 1, "extent": [[0, 1]], "points": [4]}, "tasks": [{"type": "plot"}]})")
              .find("unknown task type") != std::string::npos);
    CHECK(config_error(R"({"chart": {"dim": 4, "extent": [[0, 1]], "points": [4]}})").find("chart.dim") !=
          std::string::npos);
  }
}

TEST_CASE("running scenarios") {
  SUBCASE("outputs are deterministic and versioned") {
    const Scenario s = parse_scenario(kFree, "free.json");
    RunOptions opts;
    opts.out_dir = scratch("a");
    const RunReport a = run_scenario(s, opts);
    opts.out_dir = scratch("b");
    const RunReport b = run_scenario(s, opts);
    CHECK(a.exit_code == 0);
    REQUIRE(a.tasks.size() == 3);
    for (const auto& t : a.tasks) {
      const std::string first = slurp(a.out_dir / t.csv);
      CHECK(first.rfind("# cqm-csv v1\n", 0) == 0);
      CHECK(first == slurp(b.out_dir / t.csv));
    }
    CHECK(slurp(a.out_dir / "manifest.json") == slurp(b.out_dir / "manifest.json"));
    CHECK(slurp(a.out_dir / "manifest.json").find(R"("config_hash": "fnv1a64:)") != std::string::npos);
  }

  SUBCASE("a failed residual bound gives exit code 1") {
    const Scenario s = parse_scenario(R"({
      "chart": {"dim": 2, "extent": [-1, 1], "points": 16},
      "geometry": {"connection": [{"lambda": 0, "h": 1, "mu": 0, "value": "-x2"},
                                  {"lambda": 0, "h": 2, "mu": 0, "value": "x1"}]},
      "tasks": [{"type": "validate"}]
    })");
    RunOptions opts;
    opts.out_dir = scratch("broken");
    const RunReport r = run_scenario(s, opts);
    CHECK(r.exit_code == 1);
    CHECK_FALSE(r.tasks[0].passed());
    CHECK(slurp(r.out_dir / r.tasks[0].csv).find("curvature_symmetry,2") != std::string::npos);
  }

  SUBCASE("numerical and late config failures") {
    RunOptions opts;
    opts.out_dir = scratch("fail");
    const Scenario leaving = parse_scenario(R"({"chart": {"dim": 1, "extent": [[-1, 1]], "points": [8]},
      "tasks": [{"type": "trajectory", "x0": [0], "v0": [1], "t_end": 3}]})");
    const RunReport r1 = run_scenario(leaving, opts);
    CHECK(r1.exit_code == 3);
    CHECK(r1.tasks[0].error.find("chart") != std::string::npos);

    const Scenario non_quantisable = parse_scenario(R"({"chart": {"dim": 1, "extent": [[-1, 1]], "points": [16]},
      "functions": {"q": {"f0": "x1"}},
      "tasks": [{"type": "operators", "functions": ["q"]}]})");
    CHECK(run_scenario(non_quantisable, opts).exit_code == 2);
  }

  SUBCASE("validate-only and overrides") {
    const Scenario s = parse_scenario(kFree);
    RunOptions opts;
    opts.out_dir = scratch("validate");
    opts.validate_only = true;
    opts.tolerance_profile = "grid";
    opts.k_override = 1.0;
    const RunReport r = run_scenario(s, opts);
    CHECK(r.exit_code == 0);
    REQUIRE(r.tasks.size() == 1);
    CHECK(r.tasks[0].type == "validate");
    const std::string manifest = slurp(r.out_dir / "manifest.json");
    CHECK(manifest.find(R"("tolerance_profile": "grid")") != std::string::npos);
    CHECK(manifest.find(R"("k_factor": 1.0)") != std::string::npos);
    opts.tolerance_profile = "loose";
    CHECK_THROWS_AS(run_scenario(s, opts), ConfigError);
  }
}
