#pragma once

#include <stdexcept>
#include <string>

namespace netkin {

inline constexpr const char* kVersion = "0.1.0";

// Error taxonomy. Everything derives from Error so callers can catch the
// library wholesale or by category.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid argument values (nonpositive step sizes, out-of-range indices, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// A site or agent lies outside the domain it is evaluated on.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Mismatched site spaces or field shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// State with no usable information (all-zero simplex input, non-finite data).
class DegenerateStateError : public Error {
 public:
  using Error::Error;
};

// A stochastic update left the law's admissible set beyond tolerance.
class StateViolationError : public Error {
 public:
  using Error::Error;
};

// Operation not supported by this kernel/law (missing moment oracle, ...).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

// Numerical failure: blow-up, lost positivity, failed decomposition.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Scenario configuration problems; message names the offending keys.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace netkin
