#pragma once

#include <stdexcept>
#include <string>

namespace srcsel {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (CSV cells, dimensions, empty splits).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration values, detected before any work is done.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A model could not be fit or evaluated.
class LearnerError : public Error {
 public:
  using Error::Error;
};

}  // namespace srcsel
