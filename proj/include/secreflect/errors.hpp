#pragma once

#include <stdexcept>
#include <string>

namespace secreflect {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad user input: flags, config values, template or corpus structure.
class UsageError : public Error {
public:
    using Error::Error;
};

// Failure of something outside the process: a model provider, a compiler,
// an analyzer. The CLI maps all of these to exit code 2.
class ExternalError : public Error {
public:
    using Error::Error;
};

class TransportError : public ExternalError {
public:
    using ExternalError::ExternalError;
};

class AuthError : public TransportError {
public:
    using TransportError::TransportError;
};

class RetryExhaustedError : public TransportError {
public:
    using TransportError::TransportError;
};

class MalformedPayloadError : public TransportError {
public:
    using TransportError::TransportError;
};

// Scripted model playback left its script (guard mismatch or exhaustion).
class ScriptError : public ExternalError {
public:
    using ExternalError::ExternalError;
};

class ToolMissingError : public ExternalError {
public:
    using ExternalError::ExternalError;
};

class ToolFailedError : public ExternalError {
public:
    using ExternalError::ExternalError;
};

class SarifError : public ExternalError {
public:
    using ExternalError::ExternalError;
};

// Prompt assembly could not satisfy a template or a budget.
class AssemblyError : public Error {
public:
    using Error::Error;
};

// Knowledge-base file could not be read; line is 1-based, 0 when not
// attributable to a line.
class KbFormatError : public ExternalError {
public:
    KbFormatError(const std::string& message, std::size_t line)
        : ExternalError(message), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class CorpusError : public UsageError {
public:
    using UsageError::UsageError;
};

class MetricsError : public Error {
public:
    using Error::Error;
};

} // namespace secreflect
