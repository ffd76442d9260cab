#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace actrec {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Problems with user-supplied input. The CLI maps these to exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Malformed document. `line` and `column` are 1-based; 0 means unknown.
class ParseError : public InputError {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column = 0)
      : InputError(format(what, line, column)), line_(line), column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  static std::string format(const std::string& what, std::size_t line, std::size_t column) {
    if (line == 0) return what;
    std::string out = "line " + std::to_string(line);
    if (column != 0) out += ", column " + std::to_string(column);
    return out + ": " + what;
  }

  std::size_t line_;
  std::size_t column_;
};

/// Well-formed but semantically invalid input (duplicates, bad references).
class ValidationError : public InputError {
 public:
  using InputError::InputError;
};

/// An object class that is not declared in the ontology or not admitted by
/// the scene.
class UnknownClassError : public InputError {
 public:
  explicit UnknownClassError(std::string class_name, const std::string& context = "unknown object class")
      : InputError(context + " '" + class_name + "'"), class_name_(std::move(class_name)) {}

  const std::string& class_name() const { return class_name_; }

 private:
  std::string class_name_;
};

}  // namespace actrec
