#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sfwm {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Physical or mathematical precondition violated (wavelength outside a
/// glass validity range, table extrapolation, guidance condition, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Requested mode is below cutoff at the given frequency and diameter.
class NoGuidedMode : public DomainError {
public:
    using DomainError::DomainError;
};

/// Root refinement failed to converge. Distinct from NoGuidedMode.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// Input violates a type invariant after it was successfully read.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Malformed input text or binary data. `location` is a 1-based line number
/// for text inputs and a byte offset for binary inputs.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t location)
        : Error(what), location_(location) {}

    std::size_t location() const noexcept { return location_; }

private:
    std::size_t location_;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace sfwm
