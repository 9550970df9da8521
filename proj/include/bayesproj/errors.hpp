#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bayesproj {

// Invalid configuration (empty candidate grid, mismatched seed matrices, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Snapshot step indices out of order.
class SequenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unknown node identifier.
class LookupError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// ML estimate requested with zero opportunities.
class UndefinedEstimate : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bayesproj
