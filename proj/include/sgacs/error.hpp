#pragma once

#include <stdexcept>
#include <string>

namespace sgacs {

// Base of every error thrown by the toolkit. Subclasses name the failure
// class; the CLI maps them onto exit codes (validation vs numerical).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller-side problems: bad shapes, bad parameters, violated preconditions.
class InputError : public Error {
 public:
  using Error::Error;
};

class SizeError : public InputError {
 public:
  using InputError::InputError;
};

class GridError : public InputError {
 public:
  using InputError::InputError;
};

class DimensionError : public InputError {
 public:
  using InputError::InputError;
};

class PreconditionError : public InputError {
 public:
  using InputError::InputError;
};

class DegenerateInputError : public InputError {
 public:
  using InputError::InputError;
};

class TruncationError : public InputError {
 public:
  using InputError::InputError;
};

class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

// Failures that happen while computing.
class NumericError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public NumericError {
 public:
  ConvergenceError(const std::string& what, double residual)
      : NumericError(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class CflError : public NumericError {
 public:
  using NumericError::NumericError;
};

}  // namespace sgacs
