#pragma once

#include <stdexcept>
#include <string>

namespace pabs {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid scenario, pipeline or CLI configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file (CSV, JSON artifact, TOML).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values handed to a model function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Regression could not be solved: too few samples or rank-deficient design.
class DegenerateFit : public Error {
 public:
  DegenerateFit(const std::string& context, const std::string& what)
      : Error(context.empty() ? what : context + ": " + what), context_(context) {}

  const std::string& context() const { return context_; }

 private:
  std::string context_;
};

/// Branch-and-bound ran out of nodes without improving on the root bound.
class SolverBudget : public Error {
 public:
  using Error::Error;
};

}  // namespace pabs
