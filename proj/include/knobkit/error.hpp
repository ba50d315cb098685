#pragma once

#include <stdexcept>
#include <string>

namespace knobkit {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input: bad space documents, invalid values, layout mismatches.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(what) {}
};

/// Numerical failure that survived all rescue attempts (e.g. a covariance
/// matrix that stays indefinite after the jitter ladder).
class ConditioningError : public Error {
public:
    explicit ConditioningError(const std::string& what) : Error(what) {}
};

/// Filesystem / subprocess trouble.
class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(what) {}
};

} // namespace knobkit
