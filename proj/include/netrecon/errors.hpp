#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace netrecon {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
inline std::string with_line(const std::string& msg, std::size_t line) {
  return line ? "line " + std::to_string(line) + ": " + msg : msg;
}
}  // namespace detail

// Malformed input text (bad token counts, self-loops, unparsable numbers).
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& msg, std::size_t line = 0)
      : Error(detail::with_line(msg, line)), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_ = 0;
};

// Structurally valid input that violates a data invariant (e.g. E > N).
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& msg, std::size_t line = 0)
      : Error(detail::with_line(msg, line)), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_ = 0;
};

// Duplicate pair/mode keys in one input document.
class ConflictError : public Error {
 public:
  explicit ConflictError(const std::string& msg, std::size_t line = 0)
      : Error(detail::with_line(msg, line)), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_ = 0;
};

// API misuse: arguments incompatible with the operation's contract.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Numeric failure (non-finite likelihood, zero posterior mass, ...).
class NumericError : public Error {
 public:
  using Error::Error;
};

// Degenerate posterior denominators in closed-form updates.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

}  // namespace netrecon
