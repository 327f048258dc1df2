#pragma once

#include <stdexcept>
#include <string>

namespace fpk {

// Invalid user-supplied configuration (bad sizes, ranges, names).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Dimension mismatch between containers that must be shape-congruent.
class ShapeError : public std::runtime_error {
public:
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite value encountered during evaluation or training.
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& msg, long point_index = -1)
        : std::runtime_error(msg), point_index(point_index) {}
    long point_index;
};

// Sample too small or collapsed (zero variance, all-zero density).
class DegenerateSampleError : public std::runtime_error {
public:
    explicit DegenerateSampleError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fpk
