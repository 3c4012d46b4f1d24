#pragma once

#include <stdexcept>
#include <string>

namespace flare {

// Exit-code mapping used by the CLI: config=2, data=3, launch=4.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct FormatError : DataError {
    explicit FormatError(const std::string& msg) : DataError(msg) {}
};

struct ShapeError : DataError {
    explicit ShapeError(const std::string& msg) : DataError(msg) {}
};

struct LaunchError : std::runtime_error {
    explicit LaunchError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace flare
