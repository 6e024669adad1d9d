#pragma once

#include <stdexcept>
#include <string>

namespace robrank {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or unusable input data (bad CSV rows, disconnected graphs, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

/// An iterative method failed to reach its tolerance, or a numerical
/// precondition (step size, non-singularity) was violated.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument combination supplied by a caller.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace robrank
