#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace iwvi {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad graph structure: index out of range, duplicate endpoints, self-pairs.
class TopologyError : public Error {
public:
    using Error::Error;
};

// Tensor/vector shape mismatch.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Exhaustive computation would exceed the configured guard.
class CapacityError : public Error {
public:
    using Error::Error;
};

// Invalid configuration or arguments (maps to CLI exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Non-finite values where finite ones are required (maps to CLI exit code 3).
class NumericalError : public Error {
public:
    using Error::Error;
};

// Optimizer hit a non-finite objective; carries the last valid iterate.
class OptimizerError : public Error {
public:
    OptimizerError(const std::string& what, std::vector<double> last_iterate,
                   double last_value, int iterations)
        : Error(what),
          last_iterate(std::move(last_iterate)),
          last_value(last_value),
          iterations(iterations) {}

    std::vector<double> last_iterate;
    double last_value = 0.0;
    int iterations = 0;
};

}  // namespace iwvi
