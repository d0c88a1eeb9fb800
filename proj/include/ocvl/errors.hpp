#pragma once

#include <stdexcept>
#include <string>

namespace ocvl {

// Every library failure derives from Error so callers (the CLI in particular)
// can map the category onto an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

class UndefinedInputError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed container or checkpoint. `section()` is the 4-byte tag (or
/// "HEAD"/"MAGIC") of the part that failed to parse.
class FormatError : public Error {
 public:
  FormatError(std::string section, const std::string& what)
      : Error("format error in section '" + section + "': " + what), section_(std::move(section)) {}
  const std::string& section() const noexcept { return section_; }

 private:
  std::string section_;
};

/// Non-finite value detected during a forward pass or an optimizer step.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, long long index)
      : Error(what + " (at index " + std::to_string(index) + ")"), index_(index) {}
  long long index() const noexcept { return index_; }

 private:
  long long index_;
};

}  // namespace ocvl
