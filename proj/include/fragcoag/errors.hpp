#pragma once

#include <stdexcept>
#include <string>

namespace fragcoag {

// Bad configuration, bad input files, out-of-domain arguments.  CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure at runtime (instability, invalid kernel output).  CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Requested truncation cannot represent the state (occupied size beyond K_max).
class TruncationError : public ConfigError {
public:
    explicit TruncationError(const std::string& msg) : ConfigError(msg) {}
};

} // namespace fragcoag
