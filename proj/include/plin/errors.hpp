#pragma once

#include <stdexcept>
#include <string>

namespace plin {

// Malformed or out-of-contract input data: bad file bytes, wrong bit depth,
// out-of-range values, missing keys.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values where the pipeline cannot continue (diverged training).
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace plin
