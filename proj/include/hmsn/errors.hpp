#pragma once

#include <stdexcept>
#include <string>

namespace hmsn {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A point is on or outside the ball it is supposed to live in.
struct BoundaryViolation : Error {
  using Error::Error;
};

struct DenominatorUnderflow : Error {
  using Error::Error;
};

struct ShapeError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct FormatError : Error {
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), byte_offset(offset) {}
  std::size_t byte_offset;
};

struct ChecksumMismatch : Error {
  using Error::Error;
};

}  // namespace hmsn
