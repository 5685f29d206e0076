#pragma once

#include <stdexcept>
#include <string>

namespace simpnet {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: non-finite values, shape mismatches, out-of-range settings.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A planning query that cannot be attempted (start or goal in collision).
class InvalidQuery : public Error {
 public:
  using Error::Error;
};

/// A bounded search gave up (rejection sampling, oracle success window).
class ResourceExhausted : public Error {
 public:
  using Error::Error;
};

/// NaN or Inf produced by a numeric kernel.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// File missing, unreadable or unwritable.
class IoError : public Error {
 public:
  using Error::Error;
};

/// File readable but not a valid document of the expected kind or version.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace simpnet
