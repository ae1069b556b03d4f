#pragma once

#include <stdexcept>
#include <string>

namespace hkframe {

enum class ErrorKind {
  // validation failures (CLI exit code 2)
  TriangleInequalityViolation,
  NonpositiveMeasure,
  AsymmetricDistance,
  MalformedInput,
  UnknownPoint,
  InvalidDelta,
  InvalidParams,
  InvalidM,
  InvalidSize,
  IndexMismatch,
  PrerequisiteMissing,
  HashMismatch,
  HypothesisViolated,
  LevelTooCoarse,
  // numerical failures (CLI exit code 3)
  NotSelfAdjoint,
  NegativeSpectrum,
  DegenerateLowerBound,
  NeumannDivergence,
  InfeasibleMoments,
};

const char* to_string(ErrorKind kind);

/// True for the kinds that signal a numerical failure rather than bad input.
bool is_numerical(ErrorKind kind);

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

}  // namespace hkframe
