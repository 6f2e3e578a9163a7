#pragma once

#include <stdexcept>
#include <string>

namespace rntk {

/// Invalid arguments, malformed files, or violated type invariants.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Failures of the numerics themselves (divergence, blow-up, loss of finiteness).
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// ODE trajectory left the finite range; callers are expected to resample.
struct OdeBlowupError : NumericalError {
  explicit OdeBlowupError(const std::string& what) : NumericalError(what) {}
};

}  // namespace rntk
