#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace covloc {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the operation (bad size, non-positive
/// scale, invalid cluster count, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Cholesky factorization failed even after the configured jitter escalation.
class FactorizationError : public Error {
 public:
  using Error::Error;
};

/// A linear solve failed; carries an estimate of the offending matrix condition number.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double condition)
      : Error(what), condition_(condition) {}
  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

/// Tuning hit a degenerate geometry: a non-positive trace denominator or a
/// non-positive / non-finite scaling coefficient.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// A localization strategy cannot produce a usable subproblem for a cluster.
class StrategyError : public Error {
 public:
  StrategyError(const std::string& what, int cluster) : Error(what), cluster_(cluster) {}
  int cluster() const noexcept { return cluster_; }

 private:
  int cluster_;
};

/// Ill-formed input file. Line and column are 1-based; 0 means unknown.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
      : Error(what), line_(line), column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace covloc
