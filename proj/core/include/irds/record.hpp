#pragma once

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace irds {

enum class FieldKind { id_string, text, integer, floating, id_string_list };

enum class EntityType { docs, queries, qrels, scoreddocs, docpairs };

std::string_view to_string(FieldKind kind);
std::string_view to_string(EntityType type);

std::optional<FieldKind> parse_field_kind(std::string_view name);

/// Accepts the canonical names plus the aliases documents, topics, judgments.
std::optional<EntityType> parse_entity_type(std::string_view name);

struct FieldSpec {
  std::string name;
  FieldKind kind;

  friend bool operator==(const FieldSpec&, const FieldSpec&) = default;
};

/// Ordered field list for one entity type.
///
/// Schemas constructed through make() enforce the per-entity conventions (the
/// doc_id / query_id leads, qrels carry relevance, and so on). Projected
/// schemas only keep the name-uniqueness invariant.
class Schema {
 public:
  static std::shared_ptr<const Schema> make(EntityType type,
                                            std::vector<FieldSpec> fields);

  static std::shared_ptr<const Schema> generic_docs();
  static std::shared_ptr<const Schema> generic_queries();
  static std::shared_ptr<const Schema> trec_qrels();
  static std::shared_ptr<const Schema> trec_run();
  static std::shared_ptr<const Schema> docpairs();

  EntityType entity_type() const noexcept { return type_; }
  std::span<const FieldSpec> fields() const noexcept { return fields_; }
  std::size_t size() const noexcept { return fields_.size(); }
  const FieldSpec& field(std::size_t i) const { return fields_.at(i); }
  bool projected() const noexcept { return projected_; }

  std::optional<std::size_t> index_of(std::string_view name) const;

  /// Sub-schema with exactly `names`, in the given order.
  std::shared_ptr<const Schema> project(std::span<const std::string> names) const;

  std::vector<std::string> field_names() const;

  /// JSON descriptor stored in docstore metadata.
  std::string descriptor() const;
  static std::shared_ptr<const Schema> from_descriptor(std::string_view json);

  friend bool operator==(const Schema& a, const Schema& b) {
    return a.type_ == b.type_ && a.fields_ == b.fields_;
  }

 private:
  Schema(EntityType type, std::vector<FieldSpec> fields, bool projected)
      : type_(type), fields_(std::move(fields)), projected_(projected) {}

  EntityType type_;
  std::vector<FieldSpec> fields_;
  bool projected_;
};

using SchemaPtr = std::shared_ptr<const Schema>;

using Value = std::variant<std::string, std::int64_t, double, std::vector<std::string>>;

/// Immutable tuple of values described by a schema.
///
/// Construction does not check the values against the schema; call validate()
/// for that. Every parser in this library returns validated records.
class Record {
 public:
  Record(SchemaPtr schema, std::vector<Value> values)
      : schema_(std::move(schema)), values_(std::move(values)) {}

  const Schema& schema() const noexcept { return *schema_; }
  const SchemaPtr& schema_ptr() const noexcept { return schema_; }
  std::span<const Value> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }

  const Value& at(std::size_t i) const { return values_.at(i); }
  const Value& get(std::string_view field) const;

  /// String content of an id_string or text field.
  const std::string& str(std::string_view field) const;
  std::int64_t integer(std::string_view field) const;
  double floating(std::string_view field) const;

  /// The first field, which is the entity's identifier for docs and queries.
  const std::string& id() const;

  friend bool operator==(const Record& a, const Record& b);

 private:
  SchemaPtr schema_;
  std::vector<Value> values_;
};

/// Throws SchemaViolation unless the arity and every value's kind match.
void validate(const Record& record);

/// Throws UnknownField if any name is absent from the record's schema.
Record project(const Record& record, std::span<const std::string> field_names);
Record project(const Record& record, std::initializer_list<std::string> field_names);

/// Text rendering of one value: integers and floats as decimal, lists as a
/// JSON array of strings.
std::string value_text(const Value& value);

/// Converts text to a value of the given kind; nullopt on coercion failure.
std::optional<Value> coerce(std::string_view text, FieldKind kind);

}  // namespace irds
