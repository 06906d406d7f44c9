#pragma once

#include <stdexcept>
#include <string>

namespace conc {

// Bad argument to a pure function (odd moment order, t <= 0, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A moment profile lacks an entry the requested bound needs.
class IncompleteProfile : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parameters fall outside the regime in which a bound is stated.
class OutOfRegime : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Instance exceeds an exact solver's size cap or time budget.
class SizeLimit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Infeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Experiment configuration failed schema validation; `what()` carries the
// offending field path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A measured hypothesis check failed and a bound was refused.
class HypothesisViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace conc
