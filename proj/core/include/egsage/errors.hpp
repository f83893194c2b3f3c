#pragma once

#include <stdexcept>
#include <string>

namespace egsage {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Operand or artifact shape mismatch. Messages name both shapes.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Bad input data or column layout (missing columns, unusable schema).
class SchemaError : public Error {
public:
    using Error::Error;
};

// API misuse, e.g. backward before forward.
class StateError : public Error {
public:
    using Error::Error;
};

// Non-finite values where finite ones are required.
class NumericError : public Error {
public:
    using Error::Error;
};

// Unreadable or missing input file.
class FileError : public Error {
public:
    using Error::Error;
};

// Corrupt, stale, or incompatible serialized artifact.
class ArtifactError : public Error {
public:
    using Error::Error;
};

} // namespace egsage
