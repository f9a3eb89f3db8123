#pragma once

#include <stdexcept>
#include <string>

namespace voshm {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid model or run configuration. Carries the offending key path when known.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& message, std::string key = {})
        : Error(key.empty() ? message : key + ": " + message), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// Argument outside the mathematical domain of an operation (e.g. negative deterioration).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Linear algebra or solver failure (singular system, rigid-body mode, non-convergence).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Degenerate design for a regression fit.
class FitError : public Error {
public:
    using Error::Error;
};

/// Posterior sampling collapsed onto a single sample.
class InferenceError : public Error {
public:
    using Error::Error;
};

/// All particle weights vanished after an update.
class FilterDegeneracy : public Error {
public:
    using Error::Error;
};

/// Too many degenerate episodes in a Monte Carlo estimate.
class EstimationError : public Error {
public:
    using Error::Error;
};

/// A required artifact (surrogate, posterior) is missing.
class PrerequisiteError : public Error {
public:
    using Error::Error;
};

/// Output could not be written.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace voshm
