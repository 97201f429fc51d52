#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dedup {

// Caller supplied something malformed: bad dimensions, duplicate ids, an
// out-of-range parameter, an unreadable file. Maps to CLI exit code 1.
class InvalidInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Well-formed input the operation does not handle, e.g. rotating a
// non-square image.
class UnsupportedInput : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

// An operation was called on data that is not ready for it (e.g. an
// unhashed manifest).
class InvalidState : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// An internal consistency check failed. Maps to CLI exit code 2.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Non-fatal, per-record problem. Collected and reported on stderr by the CLI.
struct Warning {
  std::string subject;
  std::string message;

  bool operator==(const Warning&) const = default;
};

using Warnings = std::vector<Warning>;

}  // namespace dedup
