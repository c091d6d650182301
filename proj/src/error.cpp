#include "biotcrb/error.hpp"

namespace biotcrb {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParameter:
    case ErrorCode::InvalidPartition:
    case ErrorCode::InvalidFork:
    case ErrorCode::ConfigError:
      return 2;
    case ErrorCode::OutcomeSpaceTooLarge:
      return 4;
    default:
      return 3;
  }
}

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParameter: return "invalid-parameter";
    case ErrorCode::InvalidPartition: return "invalid-partition";
    case ErrorCode::InvalidFork: return "invalid-fork";
    case ErrorCode::ConfigError: return "config-error";
    case ErrorCode::DegenerateScenario: return "degenerate-scenario";
    case ErrorCode::OutcomeSpaceTooLarge: return "outcome-space-too-large";
    case ErrorCode::PartialsUnavailable: return "partials-unavailable";
    case ErrorCode::SingularWeight: return "singular-weight";
    case ErrorCode::SingularFim: return "singular-fim";
    case ErrorCode::OptimizationFailed: return "optimization-failed";
    case ErrorCode::UnsupportedDimension: return "unsupported-dimension";
    case ErrorCode::InfeasibleRelaxation: return "infeasible-relaxation";
    case ErrorCode::DegenerateInformation: return "degenerate-information";
    case ErrorCode::Unidentifiable: return "unidentifiable";
    case ErrorCode::PsiUnavailable: return "psi-unavailable";
  }
  return "unknown";
}

}  // namespace biotcrb
