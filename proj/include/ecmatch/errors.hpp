#pragma once

#include <stdexcept>
#include <string>

namespace ecmatch {

// Bad input data or configuration. CLI exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure: separation, rank deficiency, non-convergence. CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// No feasible 1:1 matching. Carries how many RCT subjects cannot be matched.
// CLI exit code 4.
class MatchingError : public std::runtime_error {
 public:
  MatchingError(const std::string& what, int unmatchable)
      : std::runtime_error(what), unmatchable_(unmatchable) {}
  int unmatchable() const { return unmatchable_; }

 private:
  int unmatchable_;
};

}  // namespace ecmatch
