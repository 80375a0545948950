#pragma once

#include <stdexcept>
#include <string>

namespace shedwatch {

// Caller supplied a value outside an operation's domain. The CLI maps this
// to exit code 2.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Filesystem or payload problem (missing manifest, short raster, unwritable
// path). The CLI maps this to exit code 1.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Numerical failure during fitting, e.g. a non-finite likelihood.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace shedwatch
