#pragma once

#include <stdexcept>
#include <string>

namespace selmopf {

/// Base of every domain error. `name()` is the machine-readable error kind
/// reported by the CLI.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* name() const noexcept { return "Error"; }
  virtual const char* module() const noexcept { return "selmopf"; }
};

#define SELMOPF_DEFINE_ERROR(Type, Module)                         \
  class Type : public Error {                                      \
   public:                                                         \
    using Error::Error;                                            \
    const char* name() const noexcept override { return #Type; }   \
    const char* module() const noexcept override { return Module; } \
  };

SELMOPF_DEFINE_ERROR(MalformedFile, "case_io")
SELMOPF_DEFINE_ERROR(ValidationError, "case_io")
SELMOPF_DEFINE_ERROR(IslandError, "case_io")
SELMOPF_DEFINE_ERROR(SingularBranch, "grid")
SELMOPF_DEFINE_ERROR(SingularJacobian, "powerflow")
SELMOPF_DEFINE_ERROR(TooManyFailures, "scenario")
SELMOPF_DEFINE_ERROR(SingularSystem, "selm")
SELMOPF_DEFINE_ERROR(DimensionMismatch, "selm")
SELMOPF_DEFINE_ERROR(InsufficientData, "pipeline")
SELMOPF_DEFINE_ERROR(FormatError, "io")

#undef SELMOPF_DEFINE_ERROR

/// Newton power flow ran out of iterations; carries the last mismatch norm.
class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, double last_mismatch, int iterations)
      : Error(what), last_mismatch(last_mismatch), iterations(iterations) {}
  const char* name() const noexcept override { return "NonConvergence"; }
  const char* module() const noexcept override { return "powerflow"; }

  double last_mismatch;
  int iterations;
};

/// Final residuals of an interior-point run that did not reach tolerance.
struct IpmResiduals {
  double primal = 0.0;
  double stationarity = 0.0;
  double complementarity = 0.0;
  int iterations = 0;
};

class Infeasible : public Error {
 public:
  Infeasible(const std::string& what, IpmResiduals r) : Error(what), residuals(r) {}
  const char* name() const noexcept override { return "Infeasible"; }
  const char* module() const noexcept override { return "acopf"; }

  IpmResiduals residuals;
};

class MaxIterations : public Error {
 public:
  MaxIterations(const std::string& what, IpmResiduals r) : Error(what), residuals(r) {}
  const char* name() const noexcept override { return "MaxIterations"; }
  const char* module() const noexcept override { return "acopf"; }

  IpmResiduals residuals;
};

}  // namespace selmopf
