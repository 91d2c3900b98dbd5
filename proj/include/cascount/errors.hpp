#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cascount {

/// Inputs whose shapes do not agree (K or T mismatch, ragged rows).
class StructuralError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Spectral radius of the influence matrix is at least one.
class InstabilityError : public std::runtime_error {
public:
    InstabilityError(const std::string& what, double radius)
        : std::runtime_error(what), radius_(radius) {}
    [[nodiscard]] double radius() const noexcept { return radius_; }

private:
    double radius_;
};

/// An iterative routine hit its iteration cap; carries the best estimate.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double estimate)
        : std::runtime_error(what), estimate_(estimate) {}
    [[nodiscard]] double estimate() const noexcept { return estimate_; }

private:
    double estimate_;
};

/// Malformed input file. Line and column are 1-based; 0 means unknown.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& file, std::size_t line, std::size_t column,
               const std::string& message)
        : std::runtime_error(file + ":" + std::to_string(line) + ":" + std::to_string(column) +
                             ": " + message),
          file_(file), line_(line), column_(column) {}

    [[nodiscard]] const std::string& file() const noexcept { return file_; }
    [[nodiscard]] std::size_t line() const noexcept { return line_; }
    [[nodiscard]] std::size_t column() const noexcept { return column_; }

private:
    std::string file_;
    std::size_t line_;
    std::size_t column_;
};

} // namespace cascount
