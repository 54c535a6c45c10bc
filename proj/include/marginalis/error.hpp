#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace marginalis {

// All library failures derive from Error so callers (the CLI in particular)
// can map a category to an exit status without string matching.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

// Constrained value on or beyond its support boundary.
class BoundaryError : public DomainError {
public:
    BoundaryError(std::size_t coordinate, const std::string& what)
        : DomainError(what), coordinate_(coordinate) {}
    std::size_t coordinate() const noexcept { return coordinate_; }

private:
    std::size_t coordinate_;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

// Malformed input data. Line is 1-based, 0 when not tied to a file line.
class DataError : public Error {
public:
    explicit DataError(const std::string& what, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Well-formed data that fails a semantic rule (e.g. incomplete subject).
class ValidationError : public DataError {
public:
    using DataError::DataError;
};

class SamplingError : public Error {
public:
    using Error::Error;
};

class FitError : public Error {
public:
    using Error::Error;
};

class DiagnosticError : public Error {
public:
    using Error::Error;
};

class NoOverlapError : public Error {
public:
    using Error::Error;
};

class NoIntersectionError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    using Error::Error;
};

class UsageError : public Error {
public:
    using Error::Error;
};

}  // namespace marginalis
