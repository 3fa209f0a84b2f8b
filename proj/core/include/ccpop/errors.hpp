#pragma once

#include <stdexcept>
#include <string>

namespace ccpop {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent user input (files, config, grids). The CLI maps
/// this family to exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

class GridError : public InputError {
 public:
  using InputError::InputError;
};

class CsvError : public InputError {
 public:
  using InputError::InputError;
};

class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

/// Raised under --strict when chains fail the convergence gate (exit code 3).
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace ccpop
