#pragma once

#include <stdexcept>
#include <string>

namespace mieval {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration. CLI exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Missing or malformed input data. CLI exit code 3.
class DataError : public Error {
public:
    using Error::Error;
};

/// Numeric failure (non-finite values, solver divergence). CLI exit code 4.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Tensor or voxel-grid shape mismatch.
class ShapeError : public NumericError {
public:
    using NumericError::NumericError;
};

/// Label code outside the 5-code segmentation domain.
class InvalidLabelError : public DataError {
public:
    using DataError::DataError;
};

}  // namespace mieval
