#ifndef LWCONV_ERROR_HPP
#define LWCONV_ERROR_HPP

#include <stdexcept>
#include <string>

namespace lwconv {

// Base for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes or channel bookkeeping do not satisfy an operation's
// preconditions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A scalar argument or tensor value is out of its admissible range
// (non-finite data, non-positive dimension, bad threshold, ...).
class ValueError : public Error {
 public:
  using Error::Error;
};

// Malformed LTB1 tensor file.
class FormatError : public Error {
 public:
  enum class Kind { bad_magic, bad_rank, length_mismatch, truncated, io };

  FormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

// A backward pass was requested for a configuration that has none
// (e.g. the hard-threshold SRU gate).
class UnsupportedModeError : public Error {
 public:
  using Error::Error;
};

}  // namespace lwconv

#endif  // LWCONV_ERROR_HPP
