#pragma once

#include <stdexcept>
#include <string>

namespace wpcn {

// Base type for every failure raised by this library, so callers can catch
// one type at the boundary and map it to a process exit code.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
struct domain_error : error {
  using error::error;
};

// Root bracket endpoints do not straddle a sign change.
struct bracket_error : error {
  using error::error;
};

// An iteration budget ran out before reaching the requested tolerance.
struct convergence_error : error {
  using error::error;
};

// A closed form was requested for a path-loss exponent it does not cover.
struct unsupported_alpha : error {
  using error::error;
};

// Parameters violate a protocol feasibility requirement (for example the
// minimum valid transmit power exceeding the power budget).
struct infeasible_error : error {
  using error::error;
};

// Battery quantization produced an unusable grid (transmit power above
// capacity after rounding).
struct quantization_error : error {
  using error::error;
};

// A computation would exceed a configured resource cap (state counts).
struct resource_error : error {
  using error::error;
};

// Malformed or inconsistent run configuration.
struct config_error : error {
  using error::error;
};

}  // namespace wpcn
