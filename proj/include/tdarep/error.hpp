#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace tdarep {

// Bad input to a public operation (maps to CLI exit code 2).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed file content; carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Input that parses but violates a diagram/model invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Requested computation exceeds the configured memory budget.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Normalizing integral of a conditional density underflowed.
class DegenerateNormalization : public std::runtime_error {
 public:
  explicit DegenerateNormalization(const std::string& what, long point_index = -1)
      : std::runtime_error(what), point_index_(point_index) {}
  long point_index() const noexcept { return point_index_; }

 private:
  long point_index_;
};

// Any failure of the estimation procedure (maps to CLI exit code 3).
class FitFailure : public std::runtime_error {
 public:
  explicit FitFailure(const std::string& what, std::vector<double> probed_alphas = {})
      : std::runtime_error(what), probed_alphas_(std::move(probed_alphas)) {}
  const std::vector<double>& probed_alphas() const noexcept { return probed_alphas_; }

 private:
  std::vector<double> probed_alphas_;
};

// Theta search left the admissible box |theta|_inf <= limit.
class DivergingEstimate : public FitFailure {
 public:
  using FitFailure::FitFailure;
};

class EmptyProposal : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tdarep
