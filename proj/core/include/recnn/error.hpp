#pragma once

#include <stdexcept>
#include <string>

namespace recnn {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or layer shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input data, configuration or arguments violate a precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed, truncated or corrupted file.
class FormatError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Non-finite values, singular systems, failed convergence.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace recnn
