#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace advfv {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Malformed or unsupported input file (MSH, JSON, VTK).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Two neighbouring cell centers coincide (or nearly so).
class DegenerateMeshError : public Error {
public:
    using Error::Error;
};

class AdmissibilityError : public Error {
public:
    AdmissibilityError(const std::string& what, std::vector<std::size_t> edges)
        : Error(what), offending_edges_(std::move(edges)) {}

    const std::vector<std::size_t>& offending_edges() const noexcept { return offending_edges_; }

private:
    std::vector<std::size_t> offending_edges_;
};

/// A mathematical hypothesis of an operation does not hold for the inputs.
class PreconditionError : public Error {
public:
    using Error::Error;
};

class UnsupportedVariant : public Error {
public:
    using Error::Error;
};

class SolverError : public Error {
public:
    SolverError(const std::string& what, double residual)
        : Error(what), residual_(residual) {}

    /// Relative residual reached before giving up (NaN if none was computed).
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

class NewtonFailure : public SolverError {
public:
    using SolverError::SolverError;
};

/// Schema violation in a configuration document.
class ConfigError : public Error {
public:
    ConfigError(const std::string& what, std::string key = {})
        : Error(what), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace advfv
