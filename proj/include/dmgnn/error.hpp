#pragma once

#include <stdexcept>
#include <string>

namespace dmgnn {

/// Bad input: malformed files, inconsistent shapes, violated preconditions.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numeric failure during training or evaluation (NaN/Inf, divergence).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dmgnn
