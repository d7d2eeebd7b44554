#pragma once

#include <stdexcept>
#include <string>

namespace freebloom {

enum class ErrorKind {
    invalid_argument,
    numeric_domain,
    transport,
    parse,
    state,
    io,
};

const char* to_string(ErrorKind kind) noexcept;

// Every failure surfaced by the library carries a kind so callers (and the
// CLI exit-code mapping) can dispatch without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& message)
        : Error(ErrorKind::invalid_argument, message) {}
};

class NumericDomainError : public Error {
public:
    explicit NumericDomainError(const std::string& message)
        : Error(ErrorKind::numeric_domain, message) {}
};

class TransportError : public Error {
public:
    explicit TransportError(const std::string& message)
        : Error(ErrorKind::transport, message) {}
};

class ParseError : public Error {
public:
    ParseError(const std::string& message, std::string raw_text)
        : Error(ErrorKind::parse, message), raw_text_(std::move(raw_text)) {}

    const std::string& raw_text() const noexcept { return raw_text_; }

private:
    std::string raw_text_;
};

class StateError : public Error {
public:
    explicit StateError(const std::string& message)
        : Error(ErrorKind::state, message) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& message)
        : Error(ErrorKind::io, message) {}
};

} // namespace freebloom
