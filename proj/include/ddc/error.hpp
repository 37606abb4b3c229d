#pragma once

#include <stdexcept>
#include <string>

namespace ddc {

// Base class for every failure raised by the library. The CLI maps the
// concrete kinds onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  [[nodiscard]] virtual int exit_code() const noexcept { return 1; }
};

/// Caller supplied malformed data (bad shape, non-finite entries, parse errors).
class InvalidInput : public Error {
 public:
  using Error::Error;
  [[nodiscard]] int exit_code() const noexcept override { return 2; }
};

/// The problem is well posed but has no solution (unstable Lyapunov data,
/// non-stabilizable pair, rank condition not met).
class NoSolution : public Error {
 public:
  using Error::Error;
  [[nodiscard]] int exit_code() const noexcept override { return 3; }
};

/// An iteration stalled or produced a result that fails its own check.
class NumericalFailure : public Error {
 public:
  NumericalFailure(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  explicit NumericalFailure(const std::string& what) : Error(what) {}

  [[nodiscard]] double residual() const noexcept { return residual_; }
  [[nodiscard]] int exit_code() const noexcept override { return 4; }

 private:
  double residual_ = 0.0;
};

}  // namespace ddc
