#ifndef PDEKD_ERRORS_HPP
#define PDEKD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace pdekd {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input file (bad CSV, truncated binary, ...).
class FormatError : public Error {
public:
  using Error::Error;
};

/// Structurally valid input violating a data invariant (non-finite values,
/// duplicate coordinates, dimension mismatch against metadata).
class ValidationError : public Error {
public:
  using Error::Error;
};

/// Caller passed an argument outside the documented domain.
class ArgumentError : public Error {
public:
  using Error::Error;
};

/// Bad or missing key in a run configuration.
class ConfigError : public Error {
public:
  ConfigError(const std::string& key, const std::string& msg)
      : Error("config key '" + key + "': " + msg), key_(key) {}
  const std::string& key() const { return key_; }

private:
  std::string key_;
};

/// Numerical failure (eigensolve breakdown, singular linear system).
class NumericError : public Error {
public:
  using Error::Error;
};

/// Iterative solver did not reach tolerance; carries the final residual.
class SolverError : public Error {
public:
  SolverError(const std::string& msg, double residual)
      : Error(msg), residual_(residual) {}
  double residual() const { return residual_; }

private:
  double residual_;
};

}  // namespace pdekd

#endif
