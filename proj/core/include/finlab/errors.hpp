#pragma once

#include <stdexcept>
#include <string>

namespace finlab {

/// Invalid user-supplied parameters (tail exponent, cutoffs, grids, config keys).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Arguments outside an operation's mathematical domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A numerical budget was exceeded: window guard exhausted, uniformization
/// too long, truncated mass above tolerance. The message says what to relax.
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A solver or tabulation failed an internal consistency check.
class InternalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace finlab
