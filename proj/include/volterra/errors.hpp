#pragma once

#include <stdexcept>
#include <string>

namespace volterra {

/// Invalid construction arguments or configuration (CLI exit code 1).
class InvalidArgument : public std::invalid_argument {
public:
    explicit InvalidArgument(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Numerical failure: non-finite coefficients, Picard divergence,
/// rank-deficient regression, inconclusive study (CLI exit code 2).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// File read/write failure (CLI exit code 3).
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace volterra
