#pragma once

#include <stdexcept>

namespace atnatlas {

// Malformed inputs: bad shapes, bad files, out-of-range indices.
// The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite losses or gradients. The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace atnatlas
