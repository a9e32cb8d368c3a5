#pragma once

#include <stdexcept>
#include <string>

namespace metashap {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input violates a documented contract (bad file content, out-of-range value,
// unknown identifier). Mapped to exit code 2 by the CLI.
class ValidationError : public Error {
public:
    using Error::Error;
};

// A required file or directory could not be read.
class LoadError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

} // namespace metashap
