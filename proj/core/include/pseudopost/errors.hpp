#pragma once

#include <stdexcept>
#include <string>

namespace pseudopost {

// Error taxonomy mirrors the CLI exit-code contract:
//   ConfigError -> 2, IoError -> 3, NumericalError -> 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration, argument, or input that violates a documented
// precondition (bad dimensions, non-positive weights, malformed schema, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Filesystem and parsing failures.
class IoError : public Error {
 public:
  using Error::Error;
};

// Numerical breakdown: factorization failure after jitter, overflow,
// non-finite values where finite ones are required.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace pseudopost
