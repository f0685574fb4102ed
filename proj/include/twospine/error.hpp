#pragma once

#include <stdexcept>
#include <string>

namespace twospine {

// Base of every error the library throws. Callers that only care about
// "bad input" vs "verification failed" can catch this one type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Weights that cannot be normalized into a probability mass function.
class InvalidDistribution : public Error {
public:
    using Error::Error;
};

// A second-factorial bias was requested for a law with sigma^2 = 0.
class DegenerateVariance : public Error {
public:
    using Error::Error;
};

// Argument outside the domain of an operation (s outside [0,1], lambda < 0,
// n = 0 for the two-spine tree, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

// Malformed configuration or serialized input.
class ConfigError : public Error {
public:
    using Error::Error;
};

// A combinatorial or population bound was exceeded.
class CapacityError : public Error {
public:
    CapacityError(const std::string& what, double bound)
        : Error(what + " (bound " + std::to_string(bound) + ")"), bound_(bound) {}

    double bound() const noexcept { return bound_; }

private:
    double bound_;
};

}  // namespace twospine
