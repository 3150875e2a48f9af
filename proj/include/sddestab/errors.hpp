#ifndef SDDESTAB_ERRORS_HPP
#define SDDESTAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sddestab {

// Base class so callers can catch everything thrown by this library at once.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad run configuration: unknown mode index, step/gap mismatch, bad flags.
struct ConfigError : Error {
  using Error::Error;
};

// Structurally invalid input data: malformed generator, delay out of range,
// non-square matrix, exponent constraints violated.
struct ValidationError : Error {
  using Error::Error;
};

// A certificate prerequisite failed hard (not an M-matrix, empty feasible set,
// exhausted stability margin).
struct CertificateError : Error {
  using Error::Error;
};

// Operation requires the polynomial coefficient model but got a callback.
struct UnsupportedModelError : Error {
  using Error::Error;
};

// Monte Carlo estimation cannot produce a number (all paths exploded,
// nonpositive moments inside the fit window).
struct EstimationError : Error {
  using Error::Error;
};

}  // namespace sddestab

#endif
