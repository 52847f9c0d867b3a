#pragma once

#include <stdexcept>
#include <string>

namespace mfload {

/// Root of every error the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters, schema or invariant violations in user input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Numerical failures at run time: short or degenerate series, failed searches.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateSeriesError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Simulator asked for a tick outside the traffic series.
class SimulationBoundsError : public Error {
 public:
  using Error::Error;
};

/// A simulator invariant broke. Always a bug, never bad input.
class InternalConsistencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace mfload
