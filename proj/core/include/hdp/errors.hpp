#pragma once

#include <stdexcept>
#include <string>

namespace hdp {

// Input violated a documented precondition (dimension mismatch, bad range, ...).
struct InvalidInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A query that only makes sense at a stationary point was made elsewhere.
struct NotStationaryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Divergence, non-finite values, stalled line search, failed inner solves.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The requested analysis does not apply to the given instance.
struct UnsupportedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

} // namespace hdp
