#pragma once

#include <stdexcept>
#include <string>

namespace tractfeat {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed file contents (bad magic, truncated header, inconsistent sizes).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Well-formed input using a feature this library does not handle.
class UnsupportedError : public Error {
public:
    using Error::Error;
};

/// Wrong dimensionality or mismatched lengths.
class ShapeError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// A value violates a type invariant (non-unit direction, bad parameter).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// The input is valid but carries no usable signal (empty lesion, zero matrix).
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

}  // namespace tractfeat
