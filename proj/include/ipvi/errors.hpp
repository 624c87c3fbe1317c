#pragma once

#include <stdexcept>
#include <string>

namespace ipvi {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shape or dimension mismatch between tensor operands.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Input outside the mathematical domain of an operation (log/sqrt of
/// non-positive values, non-finite results).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Cholesky factorization hit a non-positive pivot.
class NotPositiveDefiniteError : public Error {
public:
    using Error::Error;
};

/// Triangular solve against a factor with a zero diagonal entry.
class SingularMatrixError : public Error {
public:
    using Error::Error;
};

/// API misuse: backward without a fresh forward pass, non-scalar loss,
/// mixing tensors from different tapes.
class ContractError : public Error {
public:
    using Error::Error;
};

/// Invalid experiment configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed input data (CSV parsing), with row/column location in the message.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Corrupt or incompatible checkpoint file.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Training loop aborted (non-finite payoff); message carries diagnostics.
class TrainingAbort : public Error {
public:
    using Error::Error;
};

}  // namespace ipvi
