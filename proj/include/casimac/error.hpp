#pragma once

#include <stdexcept>
#include <string>

namespace casimac {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid hyperparameters, flags, or arguments outside an operation's domain.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed or insufficient input data.
class DataError : public Error {
public:
    using Error::Error;
};

/// Raised by k-nearest-neighbour queries whose pool is too small.
class InsufficientPoolError : public DataError {
public:
    using DataError::DataError;
};

/// Linear algebra breakdown (non positive definite kernel matrix, singular system).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Model or report document that cannot be read back.
class FormatError : public DataError {
public:
    using DataError::DataError;
};

}  // namespace casimac
