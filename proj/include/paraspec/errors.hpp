#pragma once

#include <stdexcept>
#include <string>

namespace paraspec {

// Every error carries a stable kind name; the CLI prints it on stderr and maps
// the family (config vs numerical) to an exit code.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error("ConfigError", message) {}
  ConfigError(std::string kind, const std::string& message) : Error(std::move(kind), message) {}
};

#define PARASPEC_NUMERICAL_ERROR(Name)                                        \
  class Name : public NumericalError {                                        \
   public:                                                                    \
    explicit Name(const std::string& message) : NumericalError(#Name, message) {} \
  }

PARASPEC_NUMERICAL_ERROR(IterationCapExceeded);
PARASPEC_NUMERICAL_ERROR(QuadratureFailure);
PARASPEC_NUMERICAL_ERROR(OdeStepFailure);
PARASPEC_NUMERICAL_ERROR(DerivativeUnstable);
PARASPEC_NUMERICAL_ERROR(PositivityViolated);
PARASPEC_NUMERICAL_ERROR(InsufficientSamples);
PARASPEC_NUMERICAL_ERROR(DimensionMismatch);
PARASPEC_NUMERICAL_ERROR(TooFewPoints);
PARASPEC_NUMERICAL_ERROR(NonuniformGrid);
PARASPEC_NUMERICAL_ERROR(DomainError);

#undef PARASPEC_NUMERICAL_ERROR

// Aliasing or resolution failure on a torus grid; `lag` is the first offending
// iterate (or -1 when the failure is not tied to one).
class GridTooCoarse : public NumericalError {
 public:
  GridTooCoarse(const std::string& message, long lag = -1)
      : NumericalError("GridTooCoarse", message), lag_(lag) {}
  long lag() const noexcept { return lag_; }

 private:
  long lag_;
};

class UnknownObservable : public ConfigError {
 public:
  explicit UnknownObservable(const std::string& name)
      : ConfigError("UnknownObservable", "no registered observable named '" + name + "'") {}
};

class InvalidSpec : public ConfigError {
 public:
  explicit InvalidSpec(const std::string& message) : ConfigError("InvalidSpec", message) {}
};

class MissingArtifact : public ConfigError {
 public:
  explicit MissingArtifact(const std::string& path)
      : ConfigError("MissingArtifact", "required artifact not found: " + path) {}
};

}  // namespace paraspec
