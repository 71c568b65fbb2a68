#pragma once

#include <stdexcept>
#include <string>

namespace spillover {

// Base class for everything this library throws.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input-side failures: bad parameters, documents, or configuration.
// The CLI maps these to exit code 1.
struct InputError : Error {
    using Error::Error;
};

struct ParameterDomainError : InputError {
    using InputError::InputError;
};

struct ValidationError : InputError {
    using InputError::InputError;
};

struct ParseError : InputError {
    using InputError::InputError;
};

struct ConfigError : InputError {
    using InputError::InputError;
};

struct DimensionError : InputError {
    using InputError::InputError;
};

// Numerical failures discovered while solving. The CLI maps these to exit
// code 2.
struct NumericalError : Error {
    using Error::Error;
};

struct NonConvergenceError : NumericalError {
    NonConvergenceError(const std::string& what, double residual, int iterations)
        : NumericalError(what), last_residual(residual), iterations(iterations) {}
    double last_residual;
    int iterations;
};

struct SingularJacobianError : NumericalError {
    using NumericalError::NumericalError;
};

struct SeriesDivergentError : NumericalError {
    using NumericalError::NumericalError;
};

struct DegenerateAggregateError : NumericalError {
    using NumericalError::NumericalError;
};

struct RankDeficientError : NumericalError {
    using NumericalError::NumericalError;
};

}  // namespace spillover
