#pragma once

#include <stdexcept>
#include <string>

namespace rfk {

// Bad configuration, file schema, or argument combination. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure (divergent integration, overflow, solver breakdown). CLI exit code 3.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Integration aborted; carries the last time the solution was still valid.
class IntegrationError : public NumericError {
 public:
  IntegrationError(const std::string& what, double last_good_time)
      : NumericError(what), last_good_time_(last_good_time) {}
  double last_good_time() const { return last_good_time_; }

 private:
  double last_good_time_;
};

}  // namespace rfk
