#pragma once

#include <stdexcept>
#include <string>

namespace golomb {

// Bad flags, inconsistent configuration, missing input files.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent data: parse failures, invariant violations,
// out-of-bounds spans, schema mismatches.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Internal contract violations (should not be reachable from user input).
class InternalError : public std::logic_error {
 public:
  explicit InternalError(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace golomb
