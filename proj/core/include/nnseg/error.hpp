#pragma once

#include <stdexcept>
#include <string>

namespace nnseg {

/// Base class for all errors raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input violates a documented contract (bad parameters, malformed data).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Filesystem or decoding failure.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace nnseg
