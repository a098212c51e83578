#pragma once

#include <stdexcept>
#include <string>

namespace pinch {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Operands have incompatible dimensions.
class ShapeError : public Error {
public:
  using Error::Error;
};

/// Argument outside the mathematical domain of the operation (e.g. n < 2).
class DomainError : public Error {
public:
  using Error::Error;
};

/// A documented precondition (orthogonality, positivity, ...) does not hold.
class PreconditionError : public Error {
public:
  using Error::Error;
};

/// Iterative numerics failed to converge.
class NumericError : public Error {
public:
  using Error::Error;
};

/// The chart Jacobian lost rank at a sampled point.
class ChartDegeneracyError : public Error {
public:
  using Error::Error;
};

/// The normal frame could not be continued smoothly between neighbouring points.
class GaugeError : public Error {
public:
  using Error::Error;
};

/// Invalid run configuration (CLI flags, config JSON, unknown names).
class ConfigError : public Error {
public:
  using Error::Error;
};

} // namespace pinch
