#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gcv {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed textual input. `offset` is the byte position in the input at
/// which parsing stopped.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Mismatched sizes: wrong point length, incompatible cloud dimensions,
/// degenerate domains.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Numeric failure: overflow, non-finite values, request outside the
/// supported numeric range.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// nu_kernel on a rank-deficient matrix. The dual and kernel
/// characterizations of the Rabier function disagree there, so the call is
/// refused instead of silently picking one.
class RankDeficientError : public Error {
 public:
  explicit RankDeficientError(const std::string& what)
      : Error("characterizations-diverge: " + what) {}
};

}  // namespace gcv
