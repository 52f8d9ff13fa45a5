#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cqm/falg.hpp"
#include "cqm/units.hpp"

namespace cqm {

struct ScenarioTask {
  std::string id;
  std::string type;    // validate, trajectory, brackets, operators, evolve, spectrum, commutators
  std::string params;  // the task's JSON object, re-read when the task runs
};

/// A parsed scenario file. See docs/scenario.md for the format.
struct Scenario {
  std::string origin;
  std::uint64_t config_hash = 0;  // FNV-1a of the file bytes
  units::ScaledScalar mass{1.0, units::DimTag::mass()};
  units::ScaledScalar charge{1.0, units::DimTag::charge()};
  units::ScaledScalar hbar{1.0, units::DimTag::planck()};
  GeometryBundle bundle;
  std::map<std::string, SpecialQuadratic> functions;  // builtins included
  std::vector<ScenarioTask> tasks;
  double k_factor = 0.0;
  std::string output_dir;  // empty: use the run options or the environment
};

/// Throws ConfigError with "line L col C" for syntax errors and the field
/// path for schema errors.
Scenario parse_scenario(const std::string& text, const std::string& origin = "<string>");
Scenario load_scenario(const std::filesystem::path& path);

std::uint64_t fnv1a(const std::string& bytes);

struct RunOptions {
  std::filesystem::path out_dir;          // overrides the scenario and CQM_OUTPUT_DIR
  std::string tolerance_profile = "strict";
  std::optional<double> k_override;
  bool validate_only = false;             // geometry checks only
};

/// One declared residual bound.
struct Assertion {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool passed() const { return value <= tolerance; }
};

struct TaskOutcome {
  std::string id;
  std::string type;
  std::string csv;  // file name inside the output directory
  std::vector<Assertion> checks;
  std::string error;  // non-empty when the task threw
  int error_code = 0; // exit code class of the error (2 or 3)

  bool passed() const;
};

struct RunReport {
  int exit_code = 0;  // 0 ok, 1 assertion failure, 2 config error, 3 numerical failure
  std::filesystem::path out_dir;
  std::vector<TaskOutcome> tasks;
};

/// Runs the tasks in order, writes one CSV per task and manifest.json.
RunReport run_scenario(const Scenario& scenario, const RunOptions& options = {});

/// Default output directory: CQM_OUTPUT_DIR if set, else "cqm-out".
std::filesystem::path default_output_dir();

}  // namespace cqm
