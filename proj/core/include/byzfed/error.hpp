#pragma once

#include <stdexcept>
#include <string>

namespace byzfed {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration value (bad fraction, unknown method name, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed input to an operation (dimension mismatch, non-finite values).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Dataset-level failure (unreadable CSV, no cluster survives filtering).
class DataError : public Error {
 public:
  using Error::Error;
};

/// An iterative method left the finite range.
class NumericError : public Error {
 public:
  using Error::Error;
};

class ClusteringError : public Error {
 public:
  using Error::Error;
};

}  // namespace byzfed
