#pragma once

#include <stdexcept>
#include <string>

namespace whipflow {

/// Array length does not match the grid it is paired with.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Non-finite input or intermediate value.
struct NumericDomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// The radial inversion of F^eps did not converge.
struct InversionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Time stepping could not continue (dt fell below dt_min).
struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Linear solve hit a zero pivot.
struct SingularSystemError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A length scale is too small for the grid, or a stiffness too large.
struct UnderResolvedError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Caller violated a documented precondition (e.g. wrong gravity annotation).
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SchemaVersionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace whipflow
