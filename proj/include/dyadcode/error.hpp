#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dyadcode {

// Input that is well-formed but unusable (missing ids, single-label folds, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed file content. Carries the 1-based line number when known.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : DataError(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A statistical test that has nothing to test (e.g. all paired differences zero).
class InsufficientDataError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace dyadcode
