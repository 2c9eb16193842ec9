#pragma once

#include <stdexcept>
#include <string>

namespace morl {

// Manifest/config problems; the CLI maps these to exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace morl
