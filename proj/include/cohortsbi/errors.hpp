#pragma once

#include <stdexcept>
#include <string>

namespace cohortsbi {

// Error taxonomy shared by the library and the CLI. Each class maps to a
// stable one-word token on the CLI error line, so scripts can branch on it.

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file (bad header, unparsable cell, missing row).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inputs that parse but contradict each other (e.g. unplanned rate above the
// total rate at some age).
class ConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Missing or incompatible run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure: non-finite loss, non-convergent solver.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Posterior estimator places almost all mass outside the prior support.
class LeakageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// API misuse: dimension mismatches, out-of-contract arguments.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace cohortsbi
