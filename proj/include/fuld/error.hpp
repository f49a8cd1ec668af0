#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fuld {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parameter outside the admissible domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Invalid experiment configuration; `field()` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Malformed or mismatched file on disk.
class FormatError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// An expansion was asked to evaluate outside its validity region.
class RegimeError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class OverflowError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// A time integrator produced a component with magnitude above the
// divergence threshold at iteration `iteration()`.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(std::int64_t iteration, const std::string& what)
      : NumericalError(what), iteration_(iteration) {}
  std::int64_t iteration() const noexcept { return iteration_; }

 private:
  std::int64_t iteration_;
};

}  // namespace fuld
