#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace socl {

enum class ErrorKind {
  InvalidArgument,
  Io,
  Parse,
  DataIntegrity,
  Standardization,
  Infeasible,
};

// Base of every exception thrown by the library. The C API maps `kind()`
// onto a status code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(ErrorKind::Parse, "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

inline Error invalid_argument(const std::string& what) { return Error(ErrorKind::InvalidArgument, what); }

}  // namespace socl
