#pragma once

#include <stdexcept>
#include <string>

namespace stableheat {

// Exit-code taxonomy used by the CLI: 2 = validation, 3 = numerical/IO,
// 4 = assumption violation (e.g. Dalang condition fails).
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& msg, int exit_code)
      : std::runtime_error(msg), kind_(std::move(kind)), exit_code_(exit_code) {}

  const std::string& kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return exit_code_; }

 private:
  std::string kind_;
  int exit_code_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& msg) : Error("validation", msg, 2) {}
};

// Bad run setup (grid too coarse for the stencil, memory guards, ...).
class ConfigurationError : public Error {
 public:
  explicit ConfigurationError(const std::string& msg) : Error("configuration", msg, 2) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& msg) : Error("data", msg, 2) {}
};

class QueryError : public Error {
 public:
  explicit QueryError(const std::string& msg) : Error("query", msg, 2) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& msg) : Error("numerical", msg, 3) {}
};

class AnalysisError : public Error {
 public:
  explicit AnalysisError(const std::string& msg) : Error("analysis", msg, 3) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error("io", msg, 3) {}
};

class AssumptionViolation : public Error {
 public:
  explicit AssumptionViolation(const std::string& msg) : Error("assumption", msg, 4) {}
};

}  // namespace stableheat
