#pragma once

#include <stdexcept>
#include <string>

namespace fracdg {

/// Argument outside the mathematical domain of an operation (t <= 0, alpha outside (-1,0), ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Request exceeds a fixed table size (e.g. Legendre degree beyond kMaxDegree).
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Numerical breakdown: singular local system, failed eigen-solve.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid run configuration. `key()` names the offending entry.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::invalid_argument(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace fracdg
