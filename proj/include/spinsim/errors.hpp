#pragma once

#include <stdexcept>
#include <string>

namespace spinsim {

// Exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Exit code 3. Integrator blow-up, NaN states, step-size underflow.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& msg, double t_fail = 0.0)
        : std::runtime_error(msg), t_failure(t_fail) {}
    double t_failure;
};

// Exit code 4.
class FitError : public std::runtime_error {
public:
    explicit FitError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace spinsim
