#pragma once

#include <stdexcept>
#include <string>

namespace fastdiff {

// Base class for every error this library throws on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad user-supplied parameters or fields violating a documented precondition.
struct InvalidArgument : Error {
  using Error::Error;
};

// Configuration file / override problems (CLI exit code 2).
struct ConfigError : Error {
  explicit ConfigError(const std::string& key_path, const std::string& what)
      : Error(key_path + ": " + what), key(key_path) {}
  std::string key;
};

// Mass functional has the same sign at both bracket ends.
struct NoBracket : Error {
  using Error::Error;
};

// Operation requires the mass-conserving (integrable-perturbation) regime.
struct NonIntegrableRegime : Error {
  using Error::Error;
};

// Shooting trajectory exceeded the blow-up guard (wrong side of the target exponent).
struct Blowup : Error {
  using Error::Error;
};

// Bisection classifier did not flip across the search interval.
struct NoSignChange : Error {
  using Error::Error;
};

// Implicit step failed to converge after the retry budget.
struct SolverFailure : Error {
  SolverFailure(const std::string& what, double at_time)
      : Error(what + " (t=" + std::to_string(at_time) + ")"), t(at_time) {}
  double t;
};

// Extinction-time fit needs a decaying amplitude sequence.
struct NotDecaying : Error {
  using Error::Error;
};

// Check hypotheses are not met by the supplied data; the result is neither pass nor fail.
struct NotApplicable : Error {
  using Error::Error;
};

}  // namespace fastdiff
