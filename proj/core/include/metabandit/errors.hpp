#pragma once

#include <stdexcept>
#include <string>

namespace metabandit {

/// Malformed environment, policy or scheme identifier.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parameters that parse but cannot be used together (e.g. a Beta prior on a
/// Gaussian environment).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed wire record or persisted file.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Agent endpoint could not be reached after all retries.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace metabandit
