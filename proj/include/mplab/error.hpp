#pragma once

#include <stdexcept>
#include <string>

namespace mplab {

// Invalid parameters in a spec or config (exit code 2 at the CLI).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Caller broke an operation's precondition (bad sizes, empty input, ...).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A result file no longer matches the checksum recorded in its manifest.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An invariant that must hold for any input failed: an implementation bug.
class PropertyFailure : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace mplab
