#pragma once

#include <stdexcept>
#include <string>

namespace geoloc {

/// Broad failure class. The CLI maps these onto its exit codes.
enum class ErrorKind {
  kValidation,  // bad input, bad config, contract violation
  kStage,       // a pipeline stage could not complete
  kEndpoint,    // an external service could not be reached
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorKind::kValidation, what) {}
};

class StageError : public Error {
 public:
  explicit StageError(const std::string& what)
      : Error(ErrorKind::kStage, what) {}
};

class EndpointError : public Error {
 public:
  explicit EndpointError(const std::string& what)
      : Error(ErrorKind::kEndpoint, what) {}
};

/// Parse failure carrying the offending byte offset and 1-based line.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t byte, std::size_t line)
      : ValidationError(what), byte_(byte), line_(line) {}

  std::size_t byte() const noexcept { return byte_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t byte_;
  std::size_t line_;
};

}  // namespace geoloc
