#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace pidrag {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed XML or a strict-mode parse that collected diagnostics.
class ParseError : public Error {
public:
    ParseError(const std::string& message, int line = 0, int column = 0)
        : Error(line > 0 ? message + " (line " + std::to_string(line) + ", column " +
                               std::to_string(column) + ")"
                         : message),
          line_(line), column_(column) {}

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

class BuildError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class SerializationError : public Error {
public:
    using Error::Error;
};

class ImportError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

class BudgetError : public Error {
public:
    using Error::Error;
};

/// Provider or transport failure during a completion.
class ProviderError : public Error {
public:
    using Error::Error;
};

/// Rejected or missing credentials. Carries the name of the credential reference, never its value.
class AuthError : public ProviderError {
public:
    AuthError(const std::string& message, std::string credential_ref)
        : ProviderError(message), credential_ref_(std::move(credential_ref)) {}

    const std::string& credential_ref() const noexcept { return credential_ref_; }

private:
    std::string credential_ref_;
};

/// A second completion was requested while one is in flight on the same session.
class BusyError : public Error {
public:
    using Error::Error;
};

} // namespace pidrag
