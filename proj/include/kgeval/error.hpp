#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kgeval {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed triple file. Carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A query or triple references an id outside the vocabulary.
class UnknownIdError : public Error {
 public:
  using Error::Error;
};

// NaN or infinite scores/losses.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Scorer lacks a requested optional capability (e.g. activation probing).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

// Serialized file has an unexpected schema or format version.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace kgeval
