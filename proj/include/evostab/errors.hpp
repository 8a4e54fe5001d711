#pragma once

#include <stdexcept>
#include <string>

namespace evostab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A time pair was supplied with t < s.
class OrderingError : public Error {
 public:
  using Error::Error;
};

/// Malformed arguments: wrong dimension, empty grids, parameters out of domain.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A run configuration could not be parsed or names an invalid operator.
class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

/// The adaptive integrator of an OdeFlow could not continue.
class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double last_time)
      : Error(what + " (last reachable time " + std::to_string(last_time) + ")"),
        last_time_(last_time) {}

  double last_time() const { return last_time_; }

 private:
  double last_time_;
};

/// Estimated quadrature error exceeded the caller's ceiling.
class AccuracyError : public Error {
 public:
  AccuracyError(const std::string& what, double estimate)
      : Error(what), estimate_(estimate) {}

  double estimate() const { return estimate_; }

 private:
  double estimate_;
};

/// A growth function never exceeded 1 on the searched range.
class DivergenceNotObserved : public Error {
 public:
  using Error::Error;
};

/// An operation was called on data that did not pass a required verification.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

}  // namespace evostab
