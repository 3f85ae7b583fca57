#pragma once

#include <stdexcept>
#include <string>

namespace dnlab {

/// Base class for every error raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The gap between top and bottom boundary fell below the configured floor.
struct SeparationViolation : Error {
  using Error::Error;
};

/// An iterative solve hit its iteration cap before reaching tolerance.
struct NoConvergence : Error {
  using Error::Error;
};

/// A time step increased the interface sup-norm beyond the allowed slack.
struct StabilityViolation : Error {
  StabilityViolation(const std::string& msg, int step, double time)
      : Error(msg), step(step), time(time) {}
  int step = 0;
  double time = 0.0;
};

/// Operation requires a nonconstant field.
struct ConstantInput : Error {
  using Error::Error;
};

/// A convex pairing was requested for a function with negative curvature.
struct NonConvex : Error {
  using Error::Error;
};

/// Operation requires a zero-mean field.
struct NonZeroMean : Error {
  using Error::Error;
};

/// Log-linear fitting requires strictly positive samples.
struct NonPositiveValues : Error {
  using Error::Error;
};

/// Experiment configuration failed schema validation.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace dnlab
