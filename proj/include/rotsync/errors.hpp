#pragma once

#include <stdexcept>
#include <string>

namespace rotsync {

/// Base class for all errors raised by the library.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A value violated a structural invariant (non-skew input, shape mismatch,
/// block not orthogonal, ...).
struct InvariantViolation : Error {
  using Error::Error;
};

/// Nearest-point projection onto the group is not unique (rank-deficient
/// input or a singular-value tie under a sign flip).
struct DegenerateProjection : Error {
  using Error::Error;
};

/// Principal matrix logarithm is not unique: some rotation plane sits at
/// angle pi (the cut locus of the exponential map).
struct BranchAmbiguity : Error {
  using Error::Error;
};

/// Top-d eigenspace of the observation is not well separated.
struct DegenerateEigengap : Error {
  using Error::Error;
};

/// File could not be parsed as the requested format.
struct ParseError : Error {
  using Error::Error;
};

}  // namespace rotsync
