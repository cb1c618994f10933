#ifndef FAITHKIT_ERRORS_HPP
#define FAITHKIT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace faithkit {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input file (bad line, truncated block, unparseable number).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Checkpoint format version does not match what this build writes.
class VersionError : public Error {
public:
    using Error::Error;
};

/// Shape of a matrix or vector disagrees with a declared dimension.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Non-finite values or an unsolvable numeric system.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Data violates a precondition (single-class training set, bad label).
class DataError : public Error {
public:
    using Error::Error;
};

/// Input reduced to nothing (e.g. whitespace-only text).
class EmptyInputError : public Error {
public:
    using Error::Error;
};

/// Missing or unreadable/unwritable path.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace faithkit

#endif
