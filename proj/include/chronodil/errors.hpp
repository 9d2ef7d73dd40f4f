#pragma once

#include <stdexcept>
#include <string>

namespace chronodil {

// Input outside the physical domain of a formula (mass <= 0, g != 0 where
// g = 0 is required, empty bins, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Shape mismatch between operands.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical procedure could not meet its contract (grid too narrow,
// step budget exhausted, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace chronodil
