#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace invit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter or input vector violates an operation's precondition.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Malformed mesh or data file. Carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error("line " + std::to_string(line) + ": " + message), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Mesh connectivity does not satisfy the boundary/orientation invariants.
class TopologyError : public Error {
 public:
  using Error::Error;
};

/// Linear solver failed: no convergence or a non-positive curvature direction.
class SolverError : public Error {
 public:
  SolverError(const std::string& message, std::size_t iterations, double residual)
      : Error(message), iterations_(iterations), residual_(residual) {}

  std::size_t iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  std::size_t iterations_;
  double residual_;
};

/// Insulation profile update is undefined (iterate has zero boundary trace).
class DegenerateProfile : public Error {
 public:
  using Error::Error;
};

}  // namespace invit
