#pragma once

#include <stdexcept>
#include <string>

namespace schedsynth {

// Base for every error the library raises on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad arguments or inconsistent configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Corpus / checkpoint / file content problems.
class DataError : public Error {
public:
    using Error::Error;
};

// Tensor shape or axis mismatch.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Non-finite loss or a numerically undefined operation.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace schedsynth
