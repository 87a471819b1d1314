#pragma once

#include <stdexcept>
#include <string>

namespace fluxnv {

// Bad or inconsistent user-supplied parameters (config files, CLI flags).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure: non-convergence, trace drift, missing bracket or crossing.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fluxnv
