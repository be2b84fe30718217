#pragma once

#include <stdexcept>

namespace tailcast {

// Error categories map onto CLI exit codes:
//   validation_error -> 1, io_error -> 2, numeric_error -> 3.
// Math-level argument violations use std::domain_error / std::invalid_argument
// and are treated as validation failures at the CLI boundary.
struct validation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace tailcast
