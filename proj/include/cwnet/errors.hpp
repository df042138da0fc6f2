#pragma once

#include <stdexcept>
#include <string>

namespace cwnet {

// Error taxonomy shared by the library and the CLI. The CLI maps these to
// process exit codes: ConfigError -> 2, PrerequisiteError -> 3,
// NumericalError -> 4, everything else -> 1.

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

struct PersistenceError : std::runtime_error {
    explicit PersistenceError(const std::string& msg) : std::runtime_error(msg) {}
};

struct PrerequisiteError : std::runtime_error {
    explicit PrerequisiteError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace cwnet
