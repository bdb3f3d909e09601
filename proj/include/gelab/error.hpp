#pragma once

#include <stdexcept>
#include <string>

namespace gelab {

// Base of every error raised by the library. The CLI maps subclasses onto
// process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Bad or incomplete run configuration, sampling spec or config file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A measure that carries no mass where mass is required.
class EmptyMeasureError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class UnsupportedFormError : public Error {
 public:
  using Error::Error;
};

class IndeterminateError : public Error {
 public:
  using Error::Error;
};

// Explicit step larger than the positivity bound allows.
class StepRejected : public Error {
 public:
  StepRejected(const std::string& what, double admissible_dt)
      : Error(what), admissible_dt_(admissible_dt) {}
  double admissible_dt() const noexcept { return admissible_dt_; }

 private:
  double admissible_dt_;
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace gelab
