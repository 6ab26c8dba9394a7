#pragma once

#include <stdexcept>
#include <string>

namespace gp2d {

// Input violates an operation's documented precondition.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An iterative solver (ODE, root bracket, Krylov, descent) did not converge.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The requested length scale cannot be represented on the chosen grid.
class ResolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A Hilbert-space dimension exceeds the configured memory budget.
class SizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// Data unsuitable for the requested analysis (e.g. nonpositive values in a log fit).
class DataError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace gp2d
