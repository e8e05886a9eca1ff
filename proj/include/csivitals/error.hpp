#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace csivitals {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text; `line()` is 1-based, 0 when not line oriented.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Timestamps that are not strictly increasing.
class OrderingError : public ParseError {
 public:
  using ParseError::ParseError;
};

/// Ragged or mismatched tensor dimensions.
class DimensionError : public ParseError {
 public:
  using ParseError::ParseError;
};

/// A value that violates a domain invariant (bpm on a non-breathing record, ...).
class ValidationError : public ParseError {
 public:
  using ParseError::ParseError;
};

/// A value outside its documented range (bpm outside [10, 40], ...).
class RangeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Bad tuning parameter (even median window, unstable filter design, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Not enough samples to carry out an operation.
class InsufficientData : public Error {
 public:
  using Error::Error;
};

}  // namespace csivitals
