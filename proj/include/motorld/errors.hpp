#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace motorld {

/// Invalid input: malformed expressions, model files that break an
/// invariant, out-of-range options.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public ModelError {
 public:
  ParseError(const std::string& what, std::size_t position)
      : ModelError(what + " at position " + std::to_string(position)),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// A computation could not produce a trustworthy number (non-finite
/// evaluation, non-convergence, grid too coarse).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EvaluationError : public NumericalError {
 public:
  EvaluationError(const std::string& what, std::string subexpression)
      : NumericalError(what + " in '" + subexpression + "'"),
        subexpression_(std::move(subexpression)) {}

  const std::string& subexpression() const noexcept { return subexpression_; }

 private:
  std::string subexpression_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace motorld
