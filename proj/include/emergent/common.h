// Shared vocabulary types: timestamps, error classes and a few helpers used
// by every stage of the engine.
#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace emergent {

// UTC instant with one-second resolution.
using Timestamp = std::chrono::sys_seconds;
using Seconds = std::chrono::seconds;

// Base class for all errors raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters or unusable configuration (exit code 1).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Unreadable or unwritable files, network setup failures (exit code 1).
class IoError : public Error {
 public:
  using Error::Error;
};

// Bad input records. Carries the 1-based line number when known (exit code 2).
class DataError : public Error {
 public:
  DataError(const std::string& message, int64_t line = 0);
  int64_t line() const { return line_; }

 private:
  int64_t line_;
};

// Parses an RFC 3339 timestamp ("2021-10-22T00:00:00Z", with optional
// fractional seconds and a numeric offset). Fractions are truncated.
std::optional<Timestamp> parse_rfc3339(std::string_view text);

// Formats as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_rfc3339(Timestamp ts);

Timestamp from_epoch_seconds(int64_t seconds);
int64_t to_epoch_seconds(Timestamp ts);

// Start of the UTC day containing ts.
Timestamp floor_to_midnight(Timestamp ts);

// (later - earlier) expressed in hours.
double hours_between(Timestamp earlier, Timestamp later);

}  // namespace emergent
