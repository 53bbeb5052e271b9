#pragma once

#include <stdexcept>
#include <string>

namespace scd {

// Error taxonomy mirrors the CLI exit codes: validation (1), I/O or parse (2),
// connectivity (3). Argument misuse and capability gaps surface as their own
// types so callers can map them distinctly.

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ParseError : public IoError {
public:
    using IoError::IoError;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

class ConnectivityError : public Error {
public:
    using Error::Error;
};

// Requested mode needs a capability the responder does not have
// (e.g. option scoring over a chat-completions endpoint).
class CapabilityError : public ArgumentError {
public:
    using ArgumentError::ArgumentError;
};

}  // namespace scd
