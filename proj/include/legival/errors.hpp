#pragma once

#include <stdexcept>
#include <string>

namespace legival {

// Base for everything this library throws on purpose.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad configuration: unknown endpoint id, unloadable vocabulary, invalid
// threshold. CLI maps these to exit code 2.
struct ConfigError : Error {
  using Error::Error;
};

// Malformed or inconsistent input data: bad JSONL record, dangling
// problem_id, arity violations. CLI maps these to exit code 1.
struct DataError : Error {
  using Error::Error;
};

// Network-level failure after retries were exhausted.
struct TransportError : Error {
  using Error::Error;
};

// Provider answered but the payload is an error or unusable.
struct ProviderError : Error {
  using Error::Error;
};

}  // namespace legival
