#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace irds {

/// Stable failure categories. The CLI maps these onto process exit codes.
enum class ErrorKind {
  schema_violation,
  unknown_field,
  unknown_dataset,
  unsupported_entity,
  unsupported_format,
  file_missing,
  parse_error,
  hash_mismatch,
  manual_file_required,
  license_not_accepted,
  network_error,
  duplicate_doc_id,
  storage_error,
  doc_not_found,
  corrupt_gzip,
  out_of_range,
  index_mismatch,
  invalid_slice,
  registry_error,
  unsupported_platform,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class SchemaViolation : public Error {
 public:
  SchemaViolation(std::string field, std::string reason)
      : Error(ErrorKind::schema_violation,
              "schema violation in field '" + field + "': " + reason),
        field_(std::move(field)),
        reason_(std::move(reason)) {}

  const std::string& field() const noexcept { return field_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string field_;
  std::string reason_;
};

class UnknownField : public Error {
 public:
  explicit UnknownField(std::string name)
      : Error(ErrorKind::unknown_field, "unknown field '" + name + "'"),
        name_(std::move(name)) {}

  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

class ParseError : public Error {
 public:
  ParseError(std::string source, std::uint64_t line, std::uint64_t byte_offset,
             const std::string& what)
      : Error(ErrorKind::parse_error,
              source + ":" + std::to_string(line) + " (byte " +
                  std::to_string(byte_offset) + "): " + what),
        source_(std::move(source)),
        line_(line),
        byte_offset_(byte_offset) {}

  const std::string& source() const noexcept { return source_; }
  std::uint64_t line() const noexcept { return line_; }
  std::uint64_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::string source_;
  std::uint64_t line_;
  std::uint64_t byte_offset_;
};

class HashMismatch : public Error {
 public:
  HashMismatch(std::string expected, std::string actual)
      : Error(ErrorKind::hash_mismatch,
              "sha256 mismatch: expected " + expected + ", got " + actual),
        expected_(std::move(expected)),
        actual_(std::move(actual)) {}

  const std::string& expected() const noexcept { return expected_; }
  const std::string& actual() const noexcept { return actual_; }

 private:
  std::string expected_;
  std::string actual_;
};

class ManualFileRequired : public Error {
 public:
  ManualFileRequired(const std::string& path, std::string instructions)
      : Error(ErrorKind::manual_file_required,
              "file " + path + " must be acquired manually:\n" + instructions),
        instructions_(std::move(instructions)) {}

  const std::string& instructions() const noexcept { return instructions_; }

 private:
  std::string instructions_;
};

class DuplicateDocId : public Error {
 public:
  explicit DuplicateDocId(std::string id)
      : Error(ErrorKind::duplicate_doc_id, "duplicate doc_id '" + id + "'"),
        id_(std::move(id)) {}

  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

class DocNotFound : public Error {
 public:
  explicit DocNotFound(std::string id)
      : Error(ErrorKind::doc_not_found, "document '" + id + "' not found"),
        id_(std::move(id)) {}

  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

class UnknownDataset : public Error {
 public:
  UnknownDataset(std::string id, std::vector<std::string> suggestions)
      : Error(ErrorKind::unknown_dataset, message(id, suggestions)),
        id_(std::move(id)),
        suggestions_(std::move(suggestions)) {}

  const std::string& id() const noexcept { return id_; }
  const std::vector<std::string>& suggestions() const noexcept { return suggestions_; }

 private:
  static std::string message(const std::string& id, const std::vector<std::string>& suggestions) {
    std::string msg = "unknown dataset '" + id + "'";
    if (!suggestions.empty()) {
      msg += "; did you mean ";
      for (std::size_t i = 0; i < suggestions.size(); ++i) {
        if (i > 0) msg += ", ";
        msg += "'" + suggestions[i] + "'";
      }
      msg += "?";
    }
    return msg;
  }

  std::string id_;
  std::vector<std::string> suggestions_;
};

class CorruptGzip : public Error {
 public:
  CorruptGzip(std::uint64_t position, const std::string& what)
      : Error(ErrorKind::corrupt_gzip, "corrupt gzip stream near compressed byte " +
                                           std::to_string(position) + ": " + what),
        position_(position) {}

  std::uint64_t position() const noexcept { return position_; }

 private:
  std::uint64_t position_;
};

}  // namespace irds
