#pragma once

#include <stdexcept>
#include <string>

namespace aggregame {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rejected input: bad parameter value, malformed scenario file, bad grid query.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// The alpha Riccati equation escapes on the horizon.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// Divergence or NaN during integration.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace aggregame
