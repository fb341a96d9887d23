#pragma once

#include <stdexcept>
#include <string>

namespace psr {

// Base class for all library errors so callers can catch one type.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- model construction / input validation ---
struct DimensionMismatch : Error {
  using Error::Error;
};
struct NonFiniteEntry : Error {
  using Error::Error;
};
struct NegativeEntry : Error {
  using Error::Error;
};
struct NonPositiveBackground : Error {
  using Error::Error;
};
struct NegativeWeight : Error {
  using Error::Error;
};
struct ParseError : Error {
  using Error::Error;
};
struct NonIntegerCount : Error {
  using Error::Error;
};

// --- objectives ---
struct NonPositiveRate : Error {
  using Error::Error;
};
struct InvalidSigma : Error {
  using Error::Error;
};

// --- solver ---
struct InvalidOptions : Error {
  using Error::Error;
};
// MaxItersExceeded is reported via SolveResult::converged, not thrown.

// --- conditions ---
struct InvalidSparsity : Error {
  using Error::Error;
};
struct InfeasiblePerturbation : Error {
  using Error::Error;
};
struct NoFeasibleDirection : Error {
  using Error::Error;
};

// --- bounds ---
struct DegenerateScale : Error {
  using Error::Error;
};
struct TOutOfRange : Error {
  using Error::Error;
};

}  // namespace psr
