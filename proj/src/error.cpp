#include "hkframe/error.hpp"

namespace hkframe {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::TriangleInequalityViolation: return "TriangleInequalityViolation";
    case ErrorKind::NonpositiveMeasure: return "NonpositiveMeasure";
    case ErrorKind::AsymmetricDistance: return "AsymmetricDistance";
    case ErrorKind::MalformedInput: return "MalformedInput";
    case ErrorKind::UnknownPoint: return "UnknownPoint";
    case ErrorKind::InvalidDelta: return "InvalidDelta";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::InvalidM: return "InvalidM";
    case ErrorKind::InvalidSize: return "InvalidSize";
    case ErrorKind::IndexMismatch: return "IndexMismatch";
    case ErrorKind::PrerequisiteMissing: return "PrerequisiteMissing";
    case ErrorKind::HashMismatch: return "HashMismatch";
    case ErrorKind::HypothesisViolated: return "HypothesisViolated";
    case ErrorKind::LevelTooCoarse: return "LevelTooCoarse";
    case ErrorKind::NotSelfAdjoint: return "NotSelfAdjoint";
    case ErrorKind::NegativeSpectrum: return "NegativeSpectrum";
    case ErrorKind::DegenerateLowerBound: return "DegenerateLowerBound";
    case ErrorKind::NeumannDivergence: return "NeumannDivergence";
    case ErrorKind::InfeasibleMoments: return "InfeasibleMoments";
  }
  return "Unknown";
}

bool is_numerical(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotSelfAdjoint:
    case ErrorKind::NegativeSpectrum:
    case ErrorKind::DegenerateLowerBound:
    case ErrorKind::NeumannDivergence:
    case ErrorKind::InfeasibleMoments:
      return true;
    default:
      return false;
  }
}

}  // namespace hkframe
