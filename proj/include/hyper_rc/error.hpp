#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hyper_rc {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input outside the mathematical domain of an operation (e.g. a point on or
// outside the unit ball, u outside [0,1]).
class DomainError : public Error {
public:
    using Error::Error;
};

// Shapes that do not line up.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Bad or inconsistent configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed input file.
class ParseError : public Error {
public:
    using Error::Error;
};

// An iterative method ran out of iterations. Carries the last estimate.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double last_estimate)
        : Error(what), last_estimate_(last_estimate) {}
    double last_estimate() const noexcept { return last_estimate_; }

private:
    double last_estimate_;
};

// A state or trajectory blew up (non-finite or above the divergence guard).
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, std::size_t step)
        : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

} // namespace hyper_rc
