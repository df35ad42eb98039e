#pragma once

#include <stdexcept>
#include <string>

namespace loglin {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input: bad coordinates, malformed schemas, inconsistent sizes.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A requested object is too large to materialize (tables, designs).
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver exhausted its budget without meeting tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Zero separator marginal paired with a nonzero clique marginal.
class SingularityError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A model term is not contained in any clique of the decomposition.
class CoverageError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

}  // namespace loglin
