#pragma once

#include <stdexcept>
#include <string>

namespace cqnn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidActivation : public Error {
public:
    using Error::Error;
};

class InvalidSpec : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class NonFiniteInput : public Error {
public:
    using Error::Error;
};

class NegativeRegularizer : public Error {
public:
    using Error::Error;
};

class MalformedModelFile : public Error {
public:
    using Error::Error;
};

/// Errors raised while reading or windowing data. The CLI maps all of these
/// to the "data error" exit code.
class DataError : public Error {
public:
    using Error::Error;
};

class FileNotFound : public DataError {
public:
    using DataError::DataError;
};

class ParseError : public DataError {
public:
    using DataError::DataError;
};

class MissingColumn : public DataError {
public:
    using DataError::DataError;
};

class ChannelMissing : public DataError {
public:
    using DataError::DataError;
};

class InsufficientData : public DataError {
public:
    using DataError::DataError;
};

namespace detail {

inline void require_dims(bool ok, const std::string& what) {
    if (!ok) throw DimensionMismatch(what);
}

}  // namespace detail

}  // namespace cqnn
