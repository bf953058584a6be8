#pragma once

#include <stdexcept>
#include <string>

namespace obbkit {

// Base for all obbkit exceptions.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem problems: missing file, unreadable stream, failed write.
class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

// Domain invariant violations: degenerate geometry, bad scores,
// mixed categories, infeasible synthesis specs, diverging fits.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& msg) : Error(msg) {}
};

// Malformed input data. Carries a 1-based line number when the source
// is a line-oriented file (0 means "not line-addressable").
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& msg, std::size_t line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace obbkit
