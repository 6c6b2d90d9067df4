#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cgpseg {

enum class ErrorKind {
  validity,      // gene or structure out of range
  input,         // caller passed malformed data (dimensions, empty lists)
  load,          // file missing, undecodable, or inconsistent with its manifest
  hash_mismatch, // model built against a different function library
  schema,        // unknown format/version in a JSON document
  config,        // invalid run configuration
  mutation_cap,  // accumulate mutation never changed the active graph
  usage          // CLI misuse
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validity: return "validity";
    case ErrorKind::input: return "input";
    case ErrorKind::load: return "load";
    case ErrorKind::hash_mismatch: return "hash_mismatch";
    case ErrorKind::schema: return "schema";
    case ErrorKind::config: return "config";
    case ErrorKind::mutation_cap: return "mutation_cap";
    case ErrorKind::usage: return "usage";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised when a genotype gene violates its legal range. Row and column are
/// 0-based matrix coordinates.
class ValidityError : public Error {
 public:
  ValidityError(std::size_t row, std::size_t column, const std::string& message)
      : Error(ErrorKind::validity,
              "gene (row " + std::to_string(row) + ", column " + std::to_string(column) +
                  "): " + message),
        row_(row),
        column_(column) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

inline Error input_error(const std::string& message) { return {ErrorKind::input, message}; }

}  // namespace cgpseg
