#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace matchprior {

enum class ErrorKind {
  InvalidArgument,
  OutOfSupport,
  NonFiniteLogDensity,
  StepTooLarge,
  SingularFisher,
  SupportMismatch,
  FamilyMismatch,
  InvalidHyperparameter,
  NotConverged,
  IndefiniteHessian,
  BoundaryStuck,
  BoundaryPoint,
  ZeroAcceptance,
  SingularPrecision,
  ImproperPosterior,
  TailNotDecaying,
  ToleranceNotMet,
  Unsupported,
  ParseError,
  IoError,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace matchprior
