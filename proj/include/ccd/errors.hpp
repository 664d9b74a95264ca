#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ccd {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A value violates the invariants of the type being constructed.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& what)
        : Error("config error [" + field + "]: " + what), field_(std::move(field)) {}

    [[nodiscard]] const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class PathTooShort : public Error {
public:
    using Error::Error;
};

// A trajectory doubles back relative to the reference path.
class NonMonotonicProjection : public Error {
public:
    using Error::Error;
};

class ProfileMismatch : public Error {
public:
    using Error::Error;
};

class UnorderedInput : public Error {
public:
    using Error::Error;
};

class AlignmentSkew : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    // line is 1-based; 0 means the error is not tied to a single line.
    ParseError(std::size_t line, const std::string& what)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class CalibrationError : public Error {
public:
    using Error::Error;
};

} // namespace ccd
