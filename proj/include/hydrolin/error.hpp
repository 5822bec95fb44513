#pragma once

#include <stdexcept>
#include <string>

namespace hydrolin {

// Base for every error raised by the library. Callers that only care about
// "something in hydrolin failed" can catch this.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Query outside a curve grid / analytic domain, non-positive head, degenerate
// polar origin, table lookups out of range.
class DomainError : public Error {
public:
    using Error::Error;
};

// Invalid plant configuration, curve file, or schema violation.
class ConfigError : public Error {
public:
    using Error::Error;
};

// No equilibrium exists inside the curve domain.
class InfeasibleOperatingPoint : public Error {
public:
    using Error::Error;
};

// Iterative solver gave up.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double last_residual)
        : Error(what), last_residual_(last_residual) {}

    double last_residual() const noexcept { return last_residual_; }

private:
    double last_residual_;
};

// Failure during time integration; carries the simulation time.
class SimulationError : public Error {
public:
    SimulationError(const std::string& what, double time)
        : Error(what), time_(time) {}

    double time() const noexcept { return time_; }

private:
    double time_;
};

namespace detail {

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

}  // namespace detail
}  // namespace hydrolin
