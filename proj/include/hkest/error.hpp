#pragma once

#include <stdexcept>
#include <string>

namespace hkest {

// Argument outside the mathematical domain of a function (r <= 0, s below the
// link's domain start, t below the validity threshold, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Operation-specific precondition that is not a plain domain restriction.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// No simplified closed-form result applies at the requested point.
class OutsideCoverageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure that must abort (e.g. ground state changes sign).
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, int line, const std::string& what)
      : std::runtime_error(format(field, line, what)), field_(field), line_(line) {}

  const std::string& field() const { return field_; }
  int line() const { return line_; }

 private:
  static std::string format(const std::string& field, int line, const std::string& what) {
    std::string s = "config";
    if (line > 0) s += ":" + std::to_string(line);
    if (!field.empty()) s += ": field '" + field + "'";
    return s + ": " + what;
  }
  std::string field_;
  int line_;
};

}  // namespace hkest
