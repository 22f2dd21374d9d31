#pragma once

#include <stdexcept>
#include <string>

namespace semiglobal {

// Base for all solver failures. `stage` records which pipeline stage threw;
// it is set once by the orchestrator when the error crosses a stage boundary.
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(std::string msg) : std::runtime_error(std::move(msg)) {}

  const std::string& stage() const { return stage_; }
  void set_stage(const std::string& s) {
    if (stage_.empty()) stage_ = s;
  }

 private:
  std::string stage_;
};

// Dimension or configuration mismatch in a model definition or call.
class SpecError : public SolverError {
  using SolverError::SolverError;
};

// Non-finite residual inside a finite-difference stencil.
class DifferentiationError : public SolverError {
  using SolverError::SolverError;
};

// Newton failed to locate the deterministic steady state.
class SteadyStateError : public SolverError {
  using SolverError::SolverError;
};

// A matrix required to be well conditioned is numerically singular.
class ConditioningError : public SolverError {
  using SolverError::SolverError;
};

// Stacked-time Newton divergence on the deterministic problem.
class PathError : public SolverError {
  using SolverError::SolverError;
};

// Horizon too short: terminal state not within tolerance of the steady state,
// or a moment was requested beyond the stored range.
class HorizonError : public SolverError {
  using SolverError::SolverError;
};

// Eigenvalue with modulus inside the unit-root guard band.
class IndeterminacyError : public SolverError {
  using SolverError::SolverError;
};

// Count of unstable eigenvalues does not match the number of jump variables.
class BlanchardKahnError : public SolverError {
  using SolverError::SolverError;
};

// A time-varying system matrix that must be inverted is singular at some t.
class SingularSystemError : public SolverError {
  using SolverError::SolverError;
};

// Backward recursion hit an ill-conditioned step matrix.
class RecursionBreakdownError : public SolverError {
  using SolverError::SolverError;
};

// Series truncation or summability failure in a closed-form evaluation.
class DivergenceError : public SolverError {
  using SolverError::SolverError;
};

}  // namespace semiglobal
