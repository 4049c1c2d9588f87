#pragma once

#include <stdexcept>
#include <string>

namespace imkc {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter is outside its admissible range (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input files or in-memory data violate a structural requirement (exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
};

/// An eigensolver, factorization or objective produced unusable numbers (exit code 4).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace imkc
