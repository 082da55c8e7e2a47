#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mmfuse {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Precondition on an argument was violated (out-of-range rate, NoGesture, ...).
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// A name or config token could not be parsed.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset = 0)
        : Error(what), offset_(offset) {}

    /// Byte offset into the offending line, when known.
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class CalibrationInfeasible : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace mmfuse
