#pragma once

#include <stdexcept>
#include <string>

namespace scgmm {

// Caller violated a precondition: dimension mismatch, off-simplex weights,
// bad sizes. Maps to exit code 2 in the CLI.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A document or config file does not match its schema.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The numerics broke down: non-PD matrix, starvation, non-convergence of
// a finite procedure. Maps to exit code 3 in the CLI.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace scgmm
