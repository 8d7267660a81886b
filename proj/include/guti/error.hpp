#pragma once

#include <stdexcept>
#include <string>

namespace guti {

/// Caller supplied something invalid (bad record, unknown form, bad flag).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Filesystem or stream failure.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed serialized data (checkpoint, vocab, serialized poem text).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace guti
