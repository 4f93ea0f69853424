#pragma once

#include <stdexcept>
#include <string>

namespace moran {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input value (non-finite argument, wrong data size).
class InputError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Root bracketing failure, overflow, NaN, degenerate calibration.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Run-config problem. `field()` holds the JSON path of the offending entry.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

} // namespace moran
