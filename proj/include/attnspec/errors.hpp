#pragma once

#include <stdexcept>
#include <string>

namespace attnspec {

/// Bad input: a violated precondition, malformed config, or invalid matrix.
/// The CLI maps it to exit status 2.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// An internal check that should be impossible on valid input failed
/// (branch selection, discriminant sign, threshold root). Exit status 1.
class ConsistencyError : public std::runtime_error {
 public:
  explicit ConsistencyError(const std::string& what) : std::runtime_error(what) {}
};

/// The Rayleigh-quotient supremum over sum-to-one weights is not attained
/// because the all-ones vector is orthogonal to the top eigenspace.
class UnattainableError : public ValidationError {
 public:
  UnattainableError(const std::string& what, double supremum)
      : ValidationError(what), supremum_(supremum) {}
  double supremum() const noexcept { return supremum_; }

 private:
  double supremum_;
};

}  // namespace attnspec
