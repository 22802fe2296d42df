#pragma once

#include <stdexcept>
#include <string>

namespace japan {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape mismatch between operands.
struct DimensionError : Error {
  using Error::Error;
};

// Non-finite loss/gradient or other optimisation failure.
struct TrainingError : Error {
  using Error::Error;
};

struct CalibrationError : Error {
  using Error::Error;
};

// Bad user-supplied configuration (unknown method, missing model, K > m, ...).
struct ConfigError : Error {
  using Error::Error;
};

// Singular systems, divergent estimators and similar numeric failures.
struct NumericError : Error {
  using Error::Error;
};

struct ParseError : Error {
  using Error::Error;
};

struct EstimatorError : Error {
  using Error::Error;
};

struct UnsupportedError : Error {
  using Error::Error;
};

}  // namespace japan
