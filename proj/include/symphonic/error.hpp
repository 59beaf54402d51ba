#pragma once

/// @file error.hpp
/// Exception types shared by every module.

#include <stdexcept>
#include <string>

namespace symphonic {

/// Syntax or declaration error in an expression source string.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, int line, int column)
        : std::runtime_error(what + " at line " + std::to_string(line) + ", column " +
                             std::to_string(column)),
          line_(line), column_(column) {}

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

/// A value left the real domain of an operation: log of a non-positive
/// number, a point outside a chart, a metric that is not positive definite.
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A finite-difference deformation pushed the image out of the target chart.
class StepTooLarge : public DomainError {
public:
    using DomainError::DomainError;
};

/// A file could not be read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed spec document. `pointer()` is the JSON pointer of the offending node.
class SpecError : public std::runtime_error {
public:
    SpecError(std::string pointer, const std::string& what)
        : std::runtime_error((pointer.empty() ? std::string("/") : pointer) + ": " + what),
          pointer_(std::move(pointer)) {}

    const std::string& pointer() const noexcept { return pointer_; }

private:
    std::string pointer_;
};

}  // namespace symphonic
