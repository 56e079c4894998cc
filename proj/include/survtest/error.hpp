#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace survtest {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid distribution or model parameter (lambda <= 0, unsupported df, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Iterative numeric routine failed to converge.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Malformed input data. Carries the offending element/line index.
class ValidationError : public Error {
public:
    ValidationError(const std::string& what, std::size_t index)
        : Error(what + " (at index " + std::to_string(index) + ")"), index_(index) {}
    explicit ValidationError(const std::string& what) : Error(what) {}

    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_ = static_cast<std::size_t>(-1);
};

/// A test statistic cannot be formed from the data (zero variance, singular matrix).
class DegenerateStatistic : public Error {
public:
    using Error::Error;
};

/// An empirical-law p-value was requested without a matching null table.
class CalibrationRequired : public Error {
public:
    using Error::Error;
};

/// Censoring calibration or null-table quality failure.
class CalibrationError : public Error {
public:
    using Error::Error;
};

class IncompatibleModel : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace survtest
