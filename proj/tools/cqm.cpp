// cqm: run scenario files.
//
//   cqm run <config> [--out DIR] [--tolerance-profile strict|grid] [--k K]
//   cqm validate <config> [...]      geometry checks only
//
// Exit codes: 0 ok, 1 assertion failure, 2 config error, 3 numerical failure.

#include <iostream>

#include "CLI11.hpp"
#include "cqm/errors.hpp"
#include "cqm/scenario.hpp"

namespace {

struct Args {
  std::string config;
  std::string out;
  std::string profile = "strict";
  std::optional<double> k;
};

void add_common(CLI::App* cmd, Args& a) {
  cmd->add_option("config", a.config, "scenario file (JSON)")->required();
  cmd->add_option("--out", a.out, "output directory (default: $CQM_OUTPUT_DIR or ./cqm-out)");
  cmd->add_option("--tolerance-profile", a.profile, "residual bounds")->check(CLI::IsMember({"strict", "grid"}));
  cmd->add_option("--k", a.k, "override the scenario's curvature coupling k");
}

int execute(const Args& a, bool validate_only) {
  cqm::Scenario scenario;
  try {
    scenario = cqm::load_scenario(a.config);
  } catch (const cqm::Error& e) {
    std::cerr << "config error: " << a.config << ": " << e.what() << "\n";
    return 2;
  }

  cqm::RunOptions opts;
  opts.out_dir = a.out;
  opts.tolerance_profile = a.profile;
  opts.k_override = a.k;
  opts.validate_only = validate_only;
  const cqm::RunReport report = cqm::run_scenario(scenario, opts);

  for (const auto& t : report.tasks) {
    if (!t.error.empty()) {
      std::cout << "ERROR " << t.id << " (" << t.type << "): " << t.error << "\n";
      continue;
    }
    std::cout << (t.passed() ? "ok   " : "FAIL ") << t.id << " (" << t.type << ")";
    if (!t.csv.empty()) std::cout << " -> " << t.csv;
    std::cout << "\n";
    for (const auto& c : t.checks)
      std::cout << "       " << c.name << " = " << c.value << " (bound " << c.tolerance << ")"
                << (c.passed() ? "" : "  <-- exceeded") << "\n";
  }
  std::cout << "manifest: " << (report.out_dir / "manifest.json").string() << "\n";
  return report.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Covariant quantum mechanics workbench"};
  app.require_subcommand(1);
  Args run_args, validate_args;
  auto* run = app.add_subcommand("run", "run every task of a scenario");
  add_common(run, run_args);
  auto* validate = app.add_subcommand("validate", "geometry checks only");
  add_common(validate, validate_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    if (*run) return execute(run_args, false);
    return execute(validate_args, true);
  } catch (const cqm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
