#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hiermodel {

/// Invalid input: malformed model, violated precondition, unstable load.
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Arrival rate at or beyond the maximum service rate of the center.
class SaturationError : public ModelError {
public:
    using ModelError::ModelError;
};

/// An iterative solver ran out of iterations.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual, std::size_t iterations)
        : std::runtime_error(what), residual_(residual), iterations_(iterations) {}

    double residual() const noexcept { return residual_; }
    std::size_t iterations() const noexcept { return iterations_; }

private:
    double residual_;
    std::size_t iterations_;
};

}  // namespace hiermodel
