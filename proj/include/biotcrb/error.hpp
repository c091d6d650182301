#pragma once

#include <stdexcept>
#include <string>

namespace biotcrb {

enum class ErrorCode {
  InvalidParameter,
  InvalidPartition,
  InvalidFork,
  ConfigError,
  DegenerateScenario,
  OutcomeSpaceTooLarge,
  PartialsUnavailable,
  SingularWeight,
  SingularFim,
  OptimizationFailed,
  UnsupportedDimension,
  InfeasibleRelaxation,
  DegenerateInformation,
  Unidentifiable,
  PsiUnavailable,
};

// Process exit code: 2 config/validation, 3 numeric/degenerate, 4 resource cap.
int exit_code_for(ErrorCode code);

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace biotcrb
