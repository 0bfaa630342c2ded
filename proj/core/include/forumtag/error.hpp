#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace forumtag {

// Base for every error raised by the library. The CLI maps these to exit
// code 1 (validation); anything else escaping is an internal error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed input with a 1-based line number (0 when not line oriented).
class ParseError : public Error {
 public:
  ParseError(std::string source, std::size_t line, const std::string& what)
      : Error(source + (line ? ":" + std::to_string(line) : std::string()) +
              ": " + what),
        source_(std::move(source)),
        line_(line) {}

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

}  // namespace forumtag
