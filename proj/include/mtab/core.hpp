#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mtab {

inline constexpr const char* kVersion = "0.1.0";

// Error hierarchy. Every failure mode named in a module contract has a
// distinct type so callers (and the CLI exit-code mapping) can dispatch on it.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or otherwise unusable input data.
struct InputError : Error {
  using Error::Error;
};

struct ParseError : InputError {
  using InputError::InputError;
};
struct DuplicateIdError : InputError {
  using InputError::InputError;
};
struct UnknownLabelError : InputError {
  using InputError::InputError;
};
struct StratificationError : InputError {
  using InputError::InputError;
};
struct EmptyCorpusError : InputError {
  using InputError::InputError;
};
struct ConfigError : InputError {
  using InputError::InputError;
};
struct PreconditionError : InputError {
  using InputError::InputError;
};
struct AugmentationError : InputError {
  using InputError::InputError;
};
struct EmptyPoolError : InputError {
  using InputError::InputError;
};

struct ShapeError : Error {
  using Error::Error;
};
struct DivergenceError : Error {
  using Error::Error;
};
struct MissingArtifactError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

// FNV-1a 64-bit. Used for translation-cache keys, input digests and config
// hashes; stable across platforms and runs.
inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string fnv1a64_hex(std::string_view data) {
  static const char* digits = "0123456789abcdef";
  std::uint64_t h = fnv1a64(data);
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[h & 0xF];
    h >>= 4;
  }
  return out;
}

}  // namespace mtab
