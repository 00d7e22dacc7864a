#pragma once

#include <stdexcept>
#include <string>

namespace vidreason {

// Base of every error raised by the library. `location` is a human-readable
// pointer into the offending input ("kb.json: relationship_rules[3]",
// "observations:12") and may be empty.
class Error : public std::runtime_error {
 public:
  Error(const std::string& what, std::string location = {})
      : std::runtime_error(location.empty() ? what : location + ": " + what),
        location_(std::move(location)) {}

  const std::string& location() const noexcept { return location_; }

 private:
  std::string location_;
};

// Malformed syntax (bad JSON, wrong field types, unknown keys).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that violates an invariant (unknown name, duplicate,
// conflicting rule, empty video).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A state or category pairing that lies outside every knowledge-base domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Numeric or training failures (dimension mismatch, non-convergence).
class RuntimeError : public Error {
 public:
  using Error::Error;
};

}  // namespace vidreason
