#pragma once

#include <stdexcept>
#include <string>

namespace sforge {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the validity domain of a nonlinearity or profile.
class DomainError : public Error {
public:
    using Error::Error;
};

class QuadratureError : public Error {
public:
    using Error::Error;
};

/// Root finder or fixed-point iteration exceeded its budget.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// The classification limit q_f could not be established numerically.
class NoLimitError : public Error {
public:
    using Error::Error;
};

class UnsupportedFamily : public Error {
public:
    using Error::Error;
};

/// Kernel evaluated with rho < tau.
class OrderError : public Error {
public:
    using Error::Error;
};

class GridError : public Error {
public:
    using Error::Error;
};

/// An iterate left the domain of the nonlinear term (1 + eta too small).
class IterateOutOfDomain : public DomainError {
public:
    using DomainError::DomainError;
};

class NoContractionError : public Error {
public:
    using Error::Error;
};

class InconclusiveError : public Error {
public:
    using Error::Error;
};

class FitError : public Error {
public:
    using Error::Error;
};

/// Invalid run configuration; carries the offending field name.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& message)
        : Error(message), field_(std::move(field)) {}

    [[nodiscard]] const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace sforge
