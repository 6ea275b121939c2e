#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qalam {

// Base class for every error raised by the library. `code()` is a short
// machine-readable identifier surfaced by the CLI error line.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& message) : Error("invalid_argument", message) {}
};

// A record broke one of its type invariants. `field()` names the offending field.
class InvariantViolation : public Error {
 public:
  InvariantViolation(std::string field, const std::string& message)
      : Error("invariant_violation", field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// Failure while reading a JSONL input. Line numbers are 1-based; `position`
// is the byte offset inside the line where the JSON parser stopped (0 when
// the failure is not a syntax error).
class IngestError : public Error {
 public:
  IngestError(std::size_t line, std::size_t position, std::string field, const std::string& message)
      : Error(field.empty() ? "malformed_json" : "invariant_violation",
              "line " + std::to_string(line) + (position ? ", byte " + std::to_string(position) : "") +
                  ": " + message),
        line_(line),
        position_(position),
        field_(std::move(field)) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t position() const noexcept { return position_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::size_t position_;
  std::string field_;
};

class VersionMismatch : public Error {
 public:
  explicit VersionMismatch(const std::string& message) : Error("version_mismatch", message) {}
};

// Transport-level failure talking to a model endpoint; retryable.
class TransportError : public Error {
 public:
  explicit TransportError(const std::string& message) : Error("transport_error", message) {}
};

// Credentials were rejected; retrying cannot help.
class AuthError : public Error {
 public:
  explicit AuthError(const std::string& message) : Error("auth_error", message) {}
};

}  // namespace qalam
