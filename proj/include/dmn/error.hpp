#pragma once

#include <stdexcept>
#include <string>

namespace dmn {

/// Base of every exception the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad caller-supplied data: dimension mismatch, invalid labels, bad files.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent architecture or training configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values, overflow guards, degenerate eigenproblems.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Unusable model file.
class FormatError : public Error {
 public:
  enum class Kind { bad_magic, version, truncated, checksum, malformed };

  FormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace dmn
