#pragma once

#include <stdexcept>
#include <string>

namespace finsler {

// Error taxonomy shared by all modules. Callers that drive exit codes map
// InvalidInput-derived errors to "bad request" and ComputeError-derived
// errors to "computation failed".

struct InvalidInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ComputeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidMetric : InvalidInput {
  using InvalidInput::InvalidInput;
};

struct ZeroVector : InvalidInput {
  ZeroVector() : InvalidInput("tensor undefined at y = 0") {}
};

struct ZeroCovector : InvalidInput {
  ZeroCovector() : InvalidInput("dual tensor undefined at xi = 0") {}
};

struct DomainError : InvalidInput {
  using InvalidInput::InvalidInput;
};

struct PreconditionFailed : InvalidInput {
  using InvalidInput::InvalidInput;
};

struct NonPositive : InvalidInput {
  using InvalidInput::InvalidInput;
};

struct UnsupportedSpace : InvalidInput {
  using InvalidInput::InvalidInput;
};

struct NonMinimal : InvalidInput {
  using InvalidInput::InvalidInput;
};

struct NoConvergence : ComputeError {
  using ComputeError::ComputeError;
};

struct StepFailure : ComputeError {
  using ComputeError::ComputeError;
};

struct DegenerateMesh : ComputeError {
  using ComputeError::ComputeError;
};

struct InsufficientRegularity : ComputeError {
  using ComputeError::ComputeError;
};

}  // namespace finsler
