#pragma once

#include <stdexcept>
#include <string>

namespace metaworld {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments: shape mismatch, nonpositive mass, malformed grid, ...
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A state does not satisfy the measurement model's assumptions.
class ModelViolation : public Error {
 public:
  using Error::Error;
};

// Numerical breakdown during propagation (NaN, edge mass above abort threshold).
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

// Collapse check aborted because branch supports overlapped during evolution.
class BranchesReinterfered : public Error {
 public:
  using Error::Error;
};

// Scenario file did not validate. `key` is a JSON pointer to the offending entry.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace metaworld
