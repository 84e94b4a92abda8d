#pragma once

#include <stdexcept>
#include <string>

namespace percgames {

// Argument outside the evaluation domain of a generating function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed distribution or a (p, q) pair outside 0 < p + q < 1.
class InvalidParameters : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The family has no closed-form threshold; use the numeric uniqueness path.
class NoClosedForm : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// g^(2) has no interior inflection point for this family.
class NoCriticalPoint : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A sampled tree grew past its vertex cap.
class VertexCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A PTA level would hold more states than the configured cap.
class LevelCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Root finding or validation of computed probabilities failed.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Expected duration requested where draws have positive probability.
class DrawRegimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace percgames
