#pragma once

#include <stdexcept>
#include <string>

namespace defnet {

// Bad arguments or configuration. CLI exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Inputs that do not fit together (mesh/model mismatch, corrupt or missing
// files, fingerprint mismatch). CLI exit code 2.
class ConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure: inverted element, failed factorization, NaN loss,
// too many non-converged samples. CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Element inversion under a law that cannot handle it.
class ElementInversionError : public NumericalError {
 public:
  ElementInversionError(std::size_t element, double jacobian)
      : NumericalError("element " + std::to_string(element) +
                       " inverted (J = " + std::to_string(jacobian) + ")"),
        element_(element) {}

  std::size_t element() const noexcept { return element_; }

 private:
  std::size_t element_;
};

}  // namespace defnet
