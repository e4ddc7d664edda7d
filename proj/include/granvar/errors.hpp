#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace granvar {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition or type invariant.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A sample with no particles; M_s and c_s are undefined.
class EmptySample : public Error {
 public:
  EmptySample() : Error("sample contains no particles (all counts are zero)") {}
};

/// A second-order inclusion probability outside [0, min(q_i, q_j)].
class FeasibilityError : public Error {
 public:
  using Error::Error;
};

/// Some C_ij >= 1, so a 1 - C_ij denominator vanishes or flips sign.
class DegenerateDependence : public Error {
 public:
  using Error::Error;
};

/// The C_kk solver denominator V_e - N_k * V_GY is zero.
class NonIdentifiable : public Error {
 public:
  using Error::Error;
};

/// Hard-core dart throwing exceeded its attempt budget.
class SaturationError : public Error {
 public:
  SaturationError(std::size_t attempts, std::size_t placed, std::size_t target)
      : Error("hard-core field saturated after " + std::to_string(attempts) +
              " attempts (" + std::to_string(placed) + " of " +
              std::to_string(target) + " particles placed)"),
        attempts_(attempts) {}

  std::size_t attempts() const noexcept { return attempts_; }

 private:
  std::size_t attempts_;
};

}  // namespace granvar
