#pragma once

#include <stdexcept>
#include <string>

namespace centore {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Precondition of an operation was violated (dimension mismatch etc.).
class ContractViolation : public Error {
public:
    explicit ContractViolation(const std::string& msg) : Error(msg) {}
};

/// An operation that requires X != 0 was called on the zero section.
class SlitBundleError : public ContractViolation {
public:
    explicit SlitBundleError(const std::string& msg) : ContractViolation(msg) {}
};

/// A nonpositive eigenvalue of the fundamental tensor was encountered.
/// The message names the offending sample.
class ConvexityViolation : public Error {
public:
    explicit ConvexityViolation(const std::string& msg) : Error(msg) {}
};

/// Window radius does not exceed the grid spacing.
class WindowTooSmall : public Error {
public:
    explicit WindowTooSmall(const std::string& msg) : Error(msg) {}
};

/// A radius ladder cannot be realized at the current grid resolution.
class ResolutionTooCoarse : public Error {
public:
    explicit ResolutionTooCoarse(const std::string& msg) : Error(msg) {}
};

/// Line search failed to produce descent.
class StagnationError : public Error {
public:
    explicit StagnationError(const std::string& msg) : Error(msg) {}
};

/// A sampling-based estimator received no usable samples.
class EmptySampleError : public Error {
public:
    explicit EmptySampleError(const std::string& msg) : Error(msg) {}
};

/// Scenario configuration failed to parse or validate.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

} // namespace centore
