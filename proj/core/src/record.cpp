#include "irds/record.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <string>

#include <json.hpp>

#include "irds/errors.hpp"
#include "irds/text.hpp"

namespace irds {

using nlohmann::json;

std::string_view to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::id_string: return "id_string";
    case FieldKind::text: return "text";
    case FieldKind::integer: return "integer";
    case FieldKind::floating: return "float";
    case FieldKind::id_string_list: return "id_string_list";
  }
  return "?";
}

std::string_view to_string(EntityType type) {
  switch (type) {
    case EntityType::docs: return "docs";
    case EntityType::queries: return "queries";
    case EntityType::qrels: return "qrels";
    case EntityType::scoreddocs: return "scoreddocs";
    case EntityType::docpairs: return "docpairs";
  }
  return "?";
}

std::optional<FieldKind> parse_field_kind(std::string_view name) {
  for (auto k : {FieldKind::id_string, FieldKind::text, FieldKind::integer,
                 FieldKind::floating, FieldKind::id_string_list}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

std::optional<EntityType> parse_entity_type(std::string_view name) {
  if (name == "docs" || name == "documents") return EntityType::docs;
  if (name == "queries" || name == "topics") return EntityType::queries;
  if (name == "qrels" || name == "judgments") return EntityType::qrels;
  if (name == "scoreddocs") return EntityType::scoreddocs;
  if (name == "docpairs") return EntityType::docpairs;
  return std::nullopt;
}

namespace {

void require_field(const std::vector<FieldSpec>& fields, std::string_view name,
                   FieldKind kind, EntityType type) {
  auto it = std::find_if(fields.begin(), fields.end(),
                         [&](const FieldSpec& f) { return f.name == name; });
  if (it == fields.end() || it->kind != kind) {
    throw SchemaViolation(std::string(name),
                          std::string(to_string(type)) + " schema requires " +
                              std::string(name) + " of kind " +
                              std::string(to_string(kind)));
  }
}

void require_lead(const std::vector<FieldSpec>& fields, std::string_view name,
                  EntityType type) {
  if (fields.empty() || fields.front().name != name ||
      fields.front().kind != FieldKind::id_string) {
    throw SchemaViolation(std::string(name), std::string(to_string(type)) +
                                                 " schema must start with " +
                                                 std::string(name));
  }
}

void check_names(const std::vector<FieldSpec>& fields) {
  std::set<std::string_view> seen;
  for (const auto& f : fields) {
    if (f.name.empty()) throw SchemaViolation("", "field name is empty");
    if (!seen.insert(f.name).second) throw SchemaViolation(f.name, "duplicate field name");
  }
}

}  // namespace

SchemaPtr Schema::make(EntityType type, std::vector<FieldSpec> fields) {
  check_names(fields);
  switch (type) {
    case EntityType::docs:
      require_lead(fields, "doc_id", type);
      break;
    case EntityType::queries:
      require_lead(fields, "query_id", type);
      break;
    case EntityType::qrels:
      require_field(fields, "query_id", FieldKind::id_string, type);
      require_field(fields, "doc_id", FieldKind::id_string, type);
      require_field(fields, "relevance", FieldKind::integer, type);
      break;
    case EntityType::scoreddocs:
      require_field(fields, "query_id", FieldKind::id_string, type);
      require_field(fields, "doc_id", FieldKind::id_string, type);
      require_field(fields, "score", FieldKind::floating, type);
      break;
    case EntityType::docpairs: {
      require_field(fields, "query_id", FieldKind::id_string, type);
      auto doc_fields = std::count_if(fields.begin(), fields.end(), [](const FieldSpec& f) {
        return f.name.starts_with("doc_id") && f.kind == FieldKind::id_string;
      });
      if (doc_fields < 2) {
        throw SchemaViolation("doc_id", "docpairs schema requires at least two doc_id fields");
      }
      break;
    }
  }
  return SchemaPtr(new Schema(type, std::move(fields), false));
}

SchemaPtr Schema::generic_docs() {
  static const auto schema = make(EntityType::docs, {{"doc_id", FieldKind::id_string},
                                                     {"text", FieldKind::text}});
  return schema;
}

SchemaPtr Schema::generic_queries() {
  static const auto schema = make(EntityType::queries, {{"query_id", FieldKind::id_string},
                                                        {"text", FieldKind::text}});
  return schema;
}

SchemaPtr Schema::trec_qrels() {
  static const auto schema = make(EntityType::qrels, {{"query_id", FieldKind::id_string},
                                                      {"iteration", FieldKind::id_string},
                                                      {"doc_id", FieldKind::id_string},
                                                      {"relevance", FieldKind::integer}});
  return schema;
}

SchemaPtr Schema::trec_run() {
  static const auto schema = make(EntityType::scoreddocs, {{"query_id", FieldKind::id_string},
                                                           {"doc_id", FieldKind::id_string},
                                                           {"rank", FieldKind::integer},
                                                           {"score", FieldKind::floating},
                                                           {"tag", FieldKind::id_string}});
  return schema;
}

SchemaPtr Schema::docpairs() {
  static const auto schema = make(EntityType::docpairs, {{"query_id", FieldKind::id_string},
                                                         {"doc_id_a", FieldKind::id_string},
                                                         {"doc_id_b", FieldKind::id_string}});
  return schema;
}

std::optional<std::size_t> Schema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < fields_.size(); ++i) {
    if (fields_[i].name == name) return i;
  }
  return std::nullopt;
}

SchemaPtr Schema::project(std::span<const std::string> names) const {
  std::vector<FieldSpec> fields;
  fields.reserve(names.size());
  for (const auto& name : names) {
    auto idx = index_of(name);
    if (!idx) throw UnknownField(name);
    fields.push_back(fields_[*idx]);
  }
  check_names(fields);
  return SchemaPtr(new Schema(type_, std::move(fields), true));
}

std::vector<std::string> Schema::field_names() const {
  std::vector<std::string> names;
  names.reserve(fields_.size());
  for (const auto& f : fields_) names.push_back(f.name);
  return names;
}

std::string Schema::descriptor() const {
  json fields = json::array();
  for (const auto& f : fields_) {
    fields.push_back({{"name", f.name}, {"kind", to_string(f.kind)}});
  }
  json j = {{"entity_type", to_string(type_)}, {"fields", fields}};
  if (projected_) j["projected"] = true;
  return j.dump();
}

SchemaPtr Schema::from_descriptor(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::storage_error, std::string("bad schema descriptor: ") + e.what());
  }
  auto type = parse_entity_type(j.value("entity_type", ""));
  if (!type) throw Error(ErrorKind::storage_error, "bad schema descriptor: entity_type");
  std::vector<FieldSpec> fields;
  for (const auto& f : j.at("fields")) {
    auto kind = parse_field_kind(f.at("kind").get<std::string>());
    if (!kind) throw Error(ErrorKind::storage_error, "bad schema descriptor: field kind");
    fields.push_back({f.at("name").get<std::string>(), *kind});
  }
  if (j.value("projected", false)) {
    check_names(fields);
    return SchemaPtr(new Schema(*type, std::move(fields), true));
  }
  return make(*type, std::move(fields));
}

const Value& Record::get(std::string_view field) const {
  auto idx = schema_->index_of(field);
  if (!idx) throw UnknownField(std::string(field));
  return values_.at(*idx);
}

const std::string& Record::str(std::string_view field) const {
  const auto* s = std::get_if<std::string>(&get(field));
  if (!s) throw SchemaViolation(std::string(field), "not a string field");
  return *s;
}

std::int64_t Record::integer(std::string_view field) const {
  const auto* v = std::get_if<std::int64_t>(&get(field));
  if (!v) throw SchemaViolation(std::string(field), "not an integer field");
  return *v;
}

double Record::floating(std::string_view field) const {
  const auto* v = std::get_if<double>(&get(field));
  if (!v) throw SchemaViolation(std::string(field), "not a float field");
  return *v;
}

const std::string& Record::id() const {
  const auto* s = std::get_if<std::string>(&values_.at(0));
  if (!s) throw SchemaViolation(schema_->field(0).name, "identifier is not a string");
  return *s;
}

bool operator==(const Record& a, const Record& b) {
  if (a.schema_ != b.schema_ && !(*a.schema_ == *b.schema_)) return false;
  return a.values_ == b.values_;
}

void validate(const Record& record) {
  const auto& schema = record.schema();
  if (record.size() != schema.size()) {
    throw SchemaViolation(schema.size() > record.size() ? schema.field(record.size()).name
                                                        : std::string("<extra>"),
                          "expected " + std::to_string(schema.size()) + " values, got " +
                              std::to_string(record.size()));
  }
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& spec = schema.field(i);
    const auto& value = record.at(i);
    bool ok = false;
    switch (spec.kind) {
      case FieldKind::id_string:
      case FieldKind::text:
        if (const auto* s = std::get_if<std::string>(&value)) {
          ok = true;
          if (!is_valid_utf8(*s)) throw SchemaViolation(spec.name, "invalid UTF-8");
        }
        break;
      case FieldKind::integer:
        ok = std::holds_alternative<std::int64_t>(value);
        break;
      case FieldKind::floating:
        ok = std::holds_alternative<double>(value);
        break;
      case FieldKind::id_string_list:
        if (const auto* l = std::get_if<std::vector<std::string>>(&value)) {
          ok = true;
          for (const auto& s : *l) {
            if (!is_valid_utf8(s)) throw SchemaViolation(spec.name, "invalid UTF-8");
          }
        }
        break;
    }
    if (!ok) {
      throw SchemaViolation(spec.name, "value is not of kind " + std::string(to_string(spec.kind)));
    }
  }
}

Record project(const Record& record, std::span<const std::string> field_names) {
  auto schema = record.schema().project(field_names);
  std::vector<Value> values;
  values.reserve(field_names.size());
  for (const auto& name : field_names) values.push_back(record.get(name));
  return Record(std::move(schema), std::move(values));
}

Record project(const Record& record, std::initializer_list<std::string> field_names) {
  return project(record, std::span<const std::string>(field_names.begin(), field_names.size()));
}

std::string value_text(const Value& value) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::string>) {
          return v;
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(v);
        } else if constexpr (std::is_same_v<T, double>) {
          char buf[64];
          auto res = std::to_chars(buf, buf + sizeof buf, v);
          return std::string(buf, res.ptr);
        } else {
          return json(v).dump();
        }
      },
      value);
}

std::optional<Value> coerce(std::string_view text, FieldKind kind) {
  switch (kind) {
    case FieldKind::id_string:
    case FieldKind::text:
      return Value(std::string(text));
    case FieldKind::integer: {
      std::string_view t = text;
      if (!t.empty() && t.front() == '+') t.remove_prefix(1);
      std::int64_t v = 0;
      auto res = std::from_chars(t.data(), t.data() + t.size(), v);
      if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) return std::nullopt;
      return Value(v);
    }
    case FieldKind::floating: {
      std::string_view t = text;
      if (!t.empty() && t.front() == '+') t.remove_prefix(1);
      double v = 0;
      auto res = std::from_chars(t.data(), t.data() + t.size(), v);
      if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) return std::nullopt;
      return Value(v);
    }
    case FieldKind::id_string_list: {
      try {
        auto j = json::parse(text);
        if (!j.is_array()) return std::nullopt;
        std::vector<std::string> out;
        for (const auto& e : j) {
          if (!e.is_string()) return std::nullopt;
          out.push_back(e.get<std::string>());
        }
        return Value(std::move(out));
      } catch (const json::exception&) {
        return std::nullopt;
      }
    }
  }
  return std::nullopt;
}

}  // namespace irds
