#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace selfhar {

// Root of every error the library throws. Callers that only need to report
// a failure can catch this; tests match on the concrete subclasses.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor extents or vector lengths disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Invalid user-provided settings (rates, epochs, fractions, missing inputs).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Well-formed input whose content violates a precondition (non-finite
// samples, missing labels, too few examples of a class).
class DataError : public Error {
 public:
  using Error::Error;
};

// Malformed text input. Carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Binary weight file is truncated, corrupted or from another version.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace selfhar
