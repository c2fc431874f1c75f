#pragma once

#include <stdexcept>
#include <string>

namespace specbound {

// Bad numeric input: non-finite entries, inconsistent shapes, negative sigma.
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// Caller misuse: unknown enum value, out-of-range confidence, empty network.
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed external data: manifests, blobs, dataset files.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Iterative solver ran out of iterations; carries the last iterate.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& msg, double last)
        : std::runtime_error(msg), last_estimate(last) {}
    double last_estimate;
};

}  // namespace specbound
