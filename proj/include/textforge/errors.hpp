#pragma once

#include <stdexcept>
#include <string>

namespace textforge {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or invalid input data (bad records, broken invariants).
class DataError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Shape or argument mismatch between a model and its inputs.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Fitted artifacts that were not produced together (vectorizer vs model).
class FingerprintError : public Error {
public:
    using Error::Error;
};

/// Wraps a failure inside a pipeline stage, prefixing the stage name.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& what)
        : Error(stage + ": " + what), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace textforge
