#pragma once

#include <stdexcept>
#include <string>

namespace pcx {

/// Sample times do not line up with the required uniform grid.
struct GridMismatchError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A path does not extend far enough into the past for the requested transform.
struct InsufficientHistoryError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct EmptyInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the domain stated by the operation contract.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// A spectral density is numerically singular at a quadrature node.
struct NearSingularDensityError : std::runtime_error {
  NearSingularDensityError(const std::string& what, double lambda)
      : std::runtime_error(what), node(lambda) {}
  double node;
};

/// Operator too ill-conditioned to solve reliably.
struct IllConditionedOperatorError : std::runtime_error {
  IllConditionedOperatorError(const std::string& what, double cond)
      : std::runtime_error(what), condition(cond) {}
  double condition;
};

/// A stated precondition of the operation was not met.
struct PreconditionError : std::logic_error {
  using std::logic_error::logic_error;
};

/// A quantity violates an internal consistency invariant (signals an upstream bug).
struct InconsistencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pcx
