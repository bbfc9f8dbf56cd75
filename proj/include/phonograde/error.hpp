#pragma once

#include <stdexcept>
#include <string>

namespace phonograde {

/// Base of every error raised by the library. Data problems (bad files,
/// malformed rows, degenerate inputs) land here.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad invocation or configuration, detected before any work is done.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Not enough usable data to build or evaluate a dataset.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// A statistic is undefined for the input (e.g. zero variance).
class DegenerateError : public Error {
public:
    using Error::Error;
};

}  // namespace phonograde
