#pragma once

#include <stdexcept>
#include <string>

namespace adablur {

// Base class for every error raised by the library. The CLI maps each
// subclass onto a distinct process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on arguments was violated (bad flag, non-positive factor...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// File content is malformed, truncated, or of an unsupported format.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Checkpoint magic or version does not match this build.
class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

// Tensor shapes, image sizes or scale ratios are inconsistent.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Kernel banks of two models do not share angles, aspect or kernel count.
class TopologyError : public ShapeError {
 public:
  using ShapeError::ShapeError;
};

namespace detail {
[[noreturn]] void throw_invalid(const std::string& what);
[[noreturn]] void throw_shape(const std::string& what);
}  // namespace detail

}  // namespace adablur
