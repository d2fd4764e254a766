#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace maxwell {

/// Bad argument supplied by the caller (sizes, ranges, degenerate geometry).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operand shapes do not agree.
class DimensionMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Malformed text input; carries the 1-based line where parsing stopped.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Coefficient or source data violating its admissibility conditions
/// (non-symmetric tensor, lost ellipticity, non-finite values).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Iterative solver failure.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual, std::size_t iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
  double residual() const noexcept { return residual_; }
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  double residual_;
  std::size_t iterations_;
};

/// Jacobi preconditioner cannot be formed (zero diagonal entry).
class PreconditionerError : public SolverError {
 public:
  using SolverError::SolverError;
};

}  // namespace maxwell
