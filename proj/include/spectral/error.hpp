#pragma once

#include <stdexcept>
#include <string>

namespace spectral {

/// Base for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid input: violated precondition, bad config, malformed file.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Evaluation requested on the support of a measure (or another point
/// where the quantity is undefined).
class DomainError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// An iterative method failed: non-convergence, loss of the Herglotz
/// constraint, inconsistent cross-checks.
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace spectral
