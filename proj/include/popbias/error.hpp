#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace popbias {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or usage (CLI exit code 1).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Anything wrong with the input data (CLI exit code 2).
class DataError : public Error {
public:
    using Error::Error;
};

class ParseError : public DataError {
public:
    ParseError(std::size_t line, std::string detail, const std::string& source = {})
        : DataError((source.empty() ? std::string() : source + ": ") + "line " + std::to_string(line) + ": " + detail),
          line_(line), detail_(std::move(detail)) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    std::size_t line_;
    std::string detail_;
};

class EmptyInputError : public DataError {
public:
    EmptyInputError() : DataError("empty input: no rating records") {}
    explicit EmptyInputError(const std::string& what) : DataError(what) {}
};

class UndefinedCorrelationError : public DataError {
public:
    using DataError::DataError;
};

class UndefinedDeltaError : public DataError {
public:
    using DataError::DataError;
};

class MissingArtifactError : public DataError {
public:
    using DataError::DataError;
};

/// A learned parameter became non-finite during SGD (CLI exit code 3 when
/// every requested algorithm fails).
class TrainingDivergedError : public Error {
public:
    TrainingDivergedError(std::string algorithm, std::size_t epoch)
        : Error(algorithm + ": training diverged at epoch " + std::to_string(epoch)),
          algorithm_(std::move(algorithm)), epoch_(epoch) {}

    const std::string& algorithm() const noexcept { return algorithm_; }
    std::size_t epoch() const noexcept { return epoch_; }

private:
    std::string algorithm_;
    std::size_t epoch_;
};

}  // namespace popbias
