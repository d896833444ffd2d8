#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace formfunc {

/// Base class for every domain failure raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed text input; carries the 1-based line where parsing stopped.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Malformed binary container (binvox stream, checkpoint file).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Inputs whose shapes or lengths disagree.
class ShapeError : public Error {
public:
    using Error::Error;
};

}  // namespace formfunc
