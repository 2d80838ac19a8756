#pragma once

#include <stdexcept>
#include <string>

namespace qlimits {

// Bad or inconsistent user input (configs, CLI arguments, malformed models).
// The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A numerical routine could not meet its contract (non-convergence, non-PSD
// covariance, unsampleable tail, event budget blown).  CLI exit code 3.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace qlimits
