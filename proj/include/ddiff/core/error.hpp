#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ddiff {

/// Element index into a database or an index file. Persisted as int32.
using Index = std::uint32_t;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad argument: k > n, dimension mismatch, alpha outside (0,1), ...
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// File could not be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// File opened but its content does not parse (bad magic, truncation, checksum).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Iterative solver hit a non-finite value or a non-positive curvature.
class SolverError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
    if (!cond) throw InvalidArgument(what);
}

}  // namespace detail
}  // namespace ddiff
