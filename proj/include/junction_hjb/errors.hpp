#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace junction_hjb {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Syntax or name error in an expression. `offset()` is the byte offset in the source.
class ParseError : public Error {
 public:
  ParseError(std::size_t offset, const std::string& message)
      : Error("offset " + std::to_string(offset) + ": " + message), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Arithmetic failure while evaluating an expression.
class EvalError : public Error {
 public:
  using Error::Error;
};

/// Problem file error. `line()` is 1-based, 0 when the error is not tied to a line.
class SpecError : public Error {
 public:
  SpecError(std::size_t line, const std::string& message)
      : Error(line == 0 ? message : "line " + std::to_string(line) + ": " + message), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

class OracleError : public Error {
 public:
  using Error::Error;
};

}  // namespace junction_hjb
