#pragma once

#include <stdexcept>
#include <string>

namespace asyncfl {

/// Precondition violated by the caller (bad sizes, mismatched specs, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Training produced a non-finite parameter.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be read, written or parsed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace asyncfl
