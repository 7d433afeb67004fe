#pragma once

#include <stdexcept>
#include <string>

namespace softsensor {

/// A caller-supplied argument violates an operation's precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The data itself cannot support the requested operation (bad cells,
/// singular covariance, empty dataset, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File-system failure while reading or writing an artifact.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative solver ran out of iterations.
class ConvergenceError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace softsensor
