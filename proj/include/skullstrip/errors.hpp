#pragma once

#include <stdexcept>
#include <string>

namespace skullstrip {

/// Bad user-supplied configuration or arguments (CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Two grids that must share geometry do not.
class GeometryMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace skullstrip
