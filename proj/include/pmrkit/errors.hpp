#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pmrkit {

/// Base class for every failure raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. Line and column are 1-based; 0 means unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line = 0, std::size_t column = 0,
             std::string expected = {})
      : Error(format(message, line, column, expected)),
        line_(line),
        column_(column),
        expected_(std::move(expected)) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }
  const std::string& expected() const noexcept { return expected_; }

 private:
  static std::string format(const std::string& message, std::size_t line, std::size_t column,
                            const std::string& expected) {
    std::string out = message;
    if (line != 0) out += " at line " + std::to_string(line) + ", column " + std::to_string(column);
    if (!expected.empty()) out += " (expected " + expected + ")";
    return out;
  }

  std::size_t line_;
  std::size_t column_;
  std::string expected_;
};

/// An element kind the toolkit refuses to model (e.g. an inclusive gateway).
class UnsupportedElementError : public Error {
 public:
  UnsupportedElementError(std::string element_id, const std::string& what)
      : Error("unsupported element '" + element_id + "': " + what), element_id_(std::move(element_id)) {}
  const std::string& element_id() const noexcept { return element_id_; }

 private:
  std::string element_id_;
};

/// A document that parsed but does not satisfy its schema. `path` is a JSON pointer or XML path.
class SchemaViolation : public Error {
 public:
  SchemaViolation(std::string path, const std::string& what)
      : Error("schema violation at '" + path + "': " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// A reference to an identifier that does not exist.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

/// A branch-based representation was requested for a model that is not block-structured.
class NotConvertibleError : public Error {
 public:
  NotConvertibleError(std::string reason)
      : Error("model is not convertible: " + reason), reason_(std::move(reason)) {}
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string reason_;
};

/// Missing or unreadable configuration, templates or tokenizer tables.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Network-level failure talking to a remote service.
class TransportError : public Error {
 public:
  using Error::Error;
};

/// The remote service answered with a non-success status.
class ApiError : public Error {
 public:
  ApiError(int status, std::string body_excerpt)
      : Error("API error " + std::to_string(status) + ": " + body_excerpt),
        status_(status),
        body_excerpt_(std::move(body_excerpt)) {}
  int status() const noexcept { return status_; }
  const std::string& body_excerpt() const noexcept { return body_excerpt_; }

 private:
  int status_;
  std::string body_excerpt_;
};

/// The remote service answered with a payload that breaks the wire contract.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// No model text could be located inside an LLM response.
class ExtractionError : public Error {
 public:
  using Error::Error;
};

/// A dataset that cannot be processed at all (missing or empty).
class DatasetError : public Error {
 public:
  using Error::Error;
};

/// A conversion did not survive decode(encode(m)); always a converter bug.
class RoundTripError : public Error {
 public:
  using Error::Error;
};

}  // namespace pmrkit
