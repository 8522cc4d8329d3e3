#pragma once

#include <stdexcept>
#include <string>

namespace mage {

/// Raised when an operation's preconditions or the input data are invalid.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a positivity requirement on a (1,1)-form fails.
class PositivityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mage
