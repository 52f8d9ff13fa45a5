#pragma once

#include <stdexcept>
#include <string>

namespace cqm {

// All library failures derive from Error so callers can map them to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class StructuralError : public Error {
 public:
  using Error::Error;
};

class ResolutionError : public Error {
 public:
  using Error::Error;
};

class DegeneracyError : public Error {
 public:
  using Error::Error;
};

class ClassificationError : public Error {
 public:
  using Error::Error;
};

class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class TestStateError : public Error {
 public:
  using Error::Error;
};

class NormalizationError : public Error {
 public:
  using Error::Error;
};

/// Raised when a trajectory leaves the chart box.
class BoundaryError : public Error {
 public:
  BoundaryError(const std::string& what, double exit_time)
      : Error(what), exit_time_(exit_time) {}
  double exit_time() const { return exit_time_; }

 private:
  double exit_time_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double attained_residual)
      : Error(what), residual_(attained_residual) {}
  double attained_residual() const { return residual_; }

 private:
  double residual_;
};

class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, long step)
      : Error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

/// Config parse or schema failure. `where` is "line:col" or a field path.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::string where)
      : Error(where.empty() ? what : where + ": " + what), where_(std::move(where)) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

}  // namespace cqm
