#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nestcheck {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. Carries a 1-based source position when known.
class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& msg, std::size_t line, std::size_t column)
      : Error(format(msg, line, column)), line_(line), column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& msg, std::size_t line,
                            std::size_t column) {
    if (line == 0) return msg;
    return std::to_string(line) + ":" + std::to_string(column) + ": " + msg;
  }

  std::size_t line_;
  std::size_t column_;
};

/// Well-formed text describing an invalid model (bad references, kind mismatch).
class ModelError : public Error {
 public:
  using Error::Error;
};

/// Static-check failure in a problem expression (scoping, duplicates, siblings).
class StaticError : public Error {
 public:
  using Error::Error;
};

/// Template instantiation failure (missing/extra/negative bindings).
class InstantiationError : public Error {
 public:
  using Error::Error;
};

/// Property/model mismatch or unknown label at check time.
class CheckError : public Error {
 public:
  using Error::Error;
};

/// Runtime evaluation failure (division by zero, missing model file).
class EvalError : public Error {
 public:
  using Error::Error;
};

}  // namespace nestcheck
