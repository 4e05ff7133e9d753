#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cfb {

/// Failure categories surfaced across the library. The CLI prints these as
/// `error: <kind>: <message>` so callers can dispatch on the kind token.
enum class ErrorKind {
    config,      // invalid sizes, ratios, or configuration keys
    validation,  // bad feature vectors, unknown prediction classes
    lookup,      // undeclared class id
    size,        // empty input or K exceeding available prototypes
    range,       // schedule step outside [0, T]
    format,      // malformed snapshot / record / config file
    warmup,      // operation requires fully warmed banks
    join,        // decision/ground-truth mismatch
    io,          // filesystem failures
};

std::string_view error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
          kind_(kind),
          message_(message) {}

    ErrorKind kind() const { return kind_; }

    /// Message without the kind prefix, for rethrow-with-context.
    const std::string& message() const { return message_; }

private:
    ErrorKind kind_;
    std::string message_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& m) : Error(ErrorKind::config, m) {}
};
struct ValidationError : Error {
    explicit ValidationError(const std::string& m) : Error(ErrorKind::validation, m) {}
};
struct LookupError : Error {
    explicit LookupError(const std::string& m) : Error(ErrorKind::lookup, m) {}
};
struct SizeError : Error {
    explicit SizeError(const std::string& m) : Error(ErrorKind::size, m) {}
};
struct RangeError : Error {
    explicit RangeError(const std::string& m) : Error(ErrorKind::range, m) {}
};
struct FormatError : Error {
    explicit FormatError(const std::string& m) : Error(ErrorKind::format, m) {}
};
struct WarmupError : Error {
    explicit WarmupError(const std::string& m) : Error(ErrorKind::warmup, m) {}
};
struct JoinError : Error {
    explicit JoinError(const std::string& m) : Error(ErrorKind::join, m) {}
};
struct IoError : Error {
    explicit IoError(const std::string& m) : Error(ErrorKind::io, m) {}
};

}  // namespace cfb
