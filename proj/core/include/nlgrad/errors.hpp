#pragma once

#include <stdexcept>
#include <string>

namespace nlgrad {

/// Invalid construction parameters (kernel constants, grid spacing, exponents).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An input violates an operation's precondition (support, shape, grid mismatch).
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// rho was evaluated at the origin.
class SingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A numerical evaluation produced a non-finite value.
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(const std::string& what, long node = -1);
  long node() const noexcept { return node_; }

 private:
  long node_;
};

/// An iterative method did not converge within its budget.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nlgrad
