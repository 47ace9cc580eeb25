#pragma once

#include <stdexcept>
#include <string>

namespace dipaint {

// Caller supplied something the operation cannot accept (shape mismatch,
// out-of-range parameter, bad seed). The CLI maps this to exit code 2.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// File could not be read, written or decoded.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A solver refused or failed to produce a result (all-occluded mask,
// divergent loss, no usable source patch).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dipaint
