#pragma once

#include <stdexcept>
#include <string>

namespace kinnet {

// Base for every error the library raises on bad input or numerical failure.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& message, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
        line_(line) {}

  // 1-based line number, or 0 when the error is not tied to a line.
  int line() const { return line_; }

 private:
  int line_;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace kinnet
