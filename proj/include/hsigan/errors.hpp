#pragma once

#include <stdexcept>
#include <string>

namespace hsigan {

// Error taxonomy mirrors the CLI exit codes: config/usage problems exit 1,
// bad or unreadable data exits 2, numerical failures exit 3.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape/parameter/state errors are usage errors; they map to exit code 1.
struct ShapeError : ConfigError {
  explicit ShapeError(const std::string& msg) : ConfigError(msg) {}
};

struct ParamError : ConfigError {
  explicit ParamError(const std::string& msg) : ConfigError(msg) {}
};

struct StateError : ConfigError {
  explicit StateError(const std::string& msg) : ConfigError(msg) {}
};

}  // namespace hsigan
