#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace assouadlab {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parameter lies outside its mathematical domain.
class ParameterError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

    /// 1-based line number, 0 when the error is not tied to a line.
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ScaleUnderflowError : public Error {
public:
    using Error::Error;
};

class SizeLimitError : public Error {
public:
    using Error::Error;
};

class SingularityError : public Error {
public:
    using Error::Error;
};

class DegenerateDifferentialError : public Error {
public:
    using Error::Error;
};

class LevelBudgetError : public Error {
public:
    LevelBudgetError(const std::string& what, std::size_t surviving)
        : Error(what), surviving_(surviving) {}
    std::size_t surviving_majors() const noexcept { return surviving_; }

private:
    std::size_t surviving_;
};

class ResolutionError : public Error {
public:
    using Error::Error;
};

class InsufficientRangeError : public Error {
public:
    using Error::Error;
};

}  // namespace assouadlab
