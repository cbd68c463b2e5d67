#pragma once

#include <stdexcept>
#include <string>

namespace specpart {

// Violated precondition or malformed input. The CLI maps this to exit code 1.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical procedure failed to meet its tolerance. CLI exit code 2.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, double best_residual = 0.0)
      : std::runtime_error(what), best_residual_(best_residual) {}
  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

}  // namespace specpart
