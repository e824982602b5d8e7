#pragma once

#include <stdexcept>
#include <string>

namespace camokit {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid argument value (window sizes, patch counts, tau, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

// Inputs that are individually valid but disagree (shape mismatch, out-of-range data).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Malformed or truncated file content.
class FormatError : public Error {
public:
    using Error::Error;
};

// Filesystem failure (cannot open, cannot write).
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace camokit
