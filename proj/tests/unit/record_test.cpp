#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "irds/errors.hpp"
#include "irds/record.hpp"
#include "irds/registry.hpp"
#include "test_support.hpp"

namespace irds {
namespace {

using testing::Rng;
using testing::uniform;

SchemaPtr wide_docs_schema() {
  return Schema::make(EntityType::docs, {{"doc_id", FieldKind::id_string},
                                         {"title", FieldKind::text},
                                         {"year", FieldKind::integer},
                                         {"weight", FieldKind::floating},
                                         {"authors", FieldKind::id_string_list},
                                         {"body", FieldKind::text}});
}

Value random_value(Rng& rng, FieldKind kind) {
  switch (kind) {
    case FieldKind::id_string:
      return testing::random_id(rng, 1, 12);
    case FieldKind::text:
      return testing::random_unicode(rng, uniform(rng, 0, 40));
    case FieldKind::integer:
      return static_cast<std::int64_t>(rng());
    case FieldKind::floating:
      return std::ldexp(static_cast<double>(rng() % 1000000) - 500000.0,
                        static_cast<int>(uniform(rng, 0, 40)) - 20);
    case FieldKind::id_string_list: {
      std::vector<std::string> list(uniform(rng, 0, 4));
      for (auto& s : list) s = testing::random_id(rng, 1, 8);
      return list;
    }
  }
  return std::string();
}

Record random_record(Rng& rng, const SchemaPtr& schema) {
  std::vector<Value> values;
  for (const auto& f : schema->fields()) values.push_back(random_value(rng, f.kind));
  return Record(schema, std::move(values));
}

TEST(Record, ValidMsmarcoQrel) {
  Record r(Schema::trec_qrels(), {std::string("1185869"), std::string("0"), std::string("0"),
                                  std::int64_t{1}});
  EXPECT_NO_THROW(validate(r));
  EXPECT_EQ(r.str("query_id"), "1185869");
  EXPECT_EQ(r.integer("relevance"), 1);
}

TEST(Record, ArityMismatchIsViolation) {
  Record r(Schema::generic_docs(), {std::string("d1")});
  EXPECT_THROW(validate(r), SchemaViolation);
  Record extra(Schema::generic_docs(), {std::string("d1"), std::string("t"), std::string("x")});
  EXPECT_THROW(validate(extra), SchemaViolation);
}

TEST(Record, KindMismatchIsViolation) {
  Record r(Schema::trec_qrels(),
           {std::string("1"), std::string("0"), std::string("d"), std::string("high")});
  try {
    validate(r);
    FAIL() << "expected SchemaViolation";
  } catch (const SchemaViolation& e) {
    EXPECT_EQ(e.field(), "relevance");
  }
}

TEST(Record, InvalidUtf8TextIsViolation) {
  Record r(Schema::generic_docs(), {std::string("d1"), std::string("bad \xC3\x28 bytes")});
  EXPECT_THROW(validate(r), SchemaViolation);
}

TEST(Record, ProjectExamples) {
  Record doc(Schema::generic_docs(),
             {std::string("16"), std::string("The approach is based on a theory of justice")});
  const auto ids = project(doc, {"doc_id"});
  ASSERT_EQ(ids.size(), 1u);
  EXPECT_EQ(ids.id(), "16");
  EXPECT_EQ(ids.schema().field_names(), std::vector<std::string>{"doc_id"});

  EXPECT_EQ(project(doc, {"doc_id", "text"}), doc);
  EXPECT_THROW(project(doc, {"nonexistent"}), UnknownField);
}

TEST(Record, ProjectReordersFields) {
  Record doc(Schema::generic_docs(), {std::string("7"), std::string("body")});
  const auto r = project(doc, {"text", "doc_id"});
  EXPECT_EQ(std::get<std::string>(r.at(0)), "body");
  EXPECT_EQ(std::get<std::string>(r.at(1)), "7");
  EXPECT_TRUE(r.schema().projected());
}

TEST(Record, ProjectRejectsDuplicateNames) {
  Record doc(Schema::generic_docs(), {std::string("7"), std::string("body")});
  EXPECT_THROW(project(doc, {"doc_id", "doc_id"}), SchemaViolation);
}

TEST(Record, ProjectionPropertiesOnRandomRecords) {
  Rng rng(1201);
  const auto schema = wide_docs_schema();
  const auto names = schema->field_names();
  for (int trial = 0; trial < 500; ++trial) {
    const auto r = random_record(rng, schema);
    ASSERT_NO_THROW(validate(r));
    std::vector<std::string> subset;
    for (const auto& n : names) {
      if (uniform(rng, 0, 1)) subset.push_back(n);
    }
    std::shuffle(subset.begin(), subset.end(), rng);
    const auto p = project(r, subset);
    EXPECT_NO_THROW(validate(p));
    EXPECT_EQ(project(p, subset), p);
    for (std::size_t i = 0; i < subset.size(); ++i) EXPECT_EQ(p.at(i), r.get(subset[i]));
  }
}

TEST(Schema, EntityConventionsEnforced) {
  EXPECT_THROW(Schema::make(EntityType::docs, {{"text", FieldKind::text}}), SchemaViolation);
  EXPECT_THROW(Schema::make(EntityType::docs, {{"doc_id", FieldKind::integer}}), SchemaViolation);
  EXPECT_THROW(Schema::make(EntityType::queries, {{"doc_id", FieldKind::id_string}}),
               SchemaViolation);
  EXPECT_THROW(Schema::make(EntityType::qrels, {{"query_id", FieldKind::id_string},
                                                {"doc_id", FieldKind::id_string},
                                                {"relevance", FieldKind::floating}}),
               SchemaViolation);
  EXPECT_THROW(Schema::make(EntityType::docpairs, {{"query_id", FieldKind::id_string},
                                                   {"doc_id_a", FieldKind::id_string}}),
               SchemaViolation);
  EXPECT_THROW(Schema::make(EntityType::docs, {{"doc_id", FieldKind::id_string},
                                               {"doc_id", FieldKind::text}}),
               SchemaViolation);
}

TEST(Schema, DescriptorRoundTrip) {
  for (const auto& schema : {wide_docs_schema(), Schema::trec_qrels(), Schema::trec_run(),
                             Schema::docpairs(), Schema::generic_queries()}) {
    const auto back = Schema::from_descriptor(schema->descriptor());
    EXPECT_EQ(*back, *schema);
  }
  EXPECT_THROW(Schema::from_descriptor("{not json"), Error);
}

TEST(Schema, ShippedSchemasFollowFirstFieldConventions) {
  auto env = Environment::from_env(std::filesystem::temp_directory_path() / "irds-unused-home");
  const auto registry = Registry::builtin(env);
  for (const auto& id : registry.ids()) {
    const auto handle = registry.load(id);
    for (const auto& [type, provider] : handle.providers()) {
      const auto& first = provider.schema->field(0);
      EXPECT_EQ(first.kind, FieldKind::id_string) << id;
      if (type == EntityType::docs) EXPECT_EQ(first.name, "doc_id") << id;
      if (type != EntityType::docs) EXPECT_EQ(first.name, "query_id") << id;
      EXPECT_EQ(provider.schema->entity_type(), type) << id;
    }
  }
}

TEST(Value, TextCoercionRoundTrips) {
  Rng rng(77);
  for (int i = 0; i < 1000; ++i) {
    const Value d = random_value(rng, FieldKind::floating);
    EXPECT_EQ(coerce(value_text(d), FieldKind::floating), d);
    const Value n = random_value(rng, FieldKind::integer);
    EXPECT_EQ(coerce(value_text(n), FieldKind::integer), n);
    const Value l = random_value(rng, FieldKind::id_string_list);
    EXPECT_EQ(coerce(value_text(l), FieldKind::id_string_list), l);
  }
  EXPECT_FALSE(coerce("twelve", FieldKind::integer));
  EXPECT_FALSE(coerce("1.5x", FieldKind::floating));
  EXPECT_FALSE(coerce("", FieldKind::integer));
  EXPECT_EQ(coerce("-2", FieldKind::integer), Value(std::int64_t{-2}));
}

TEST(EntityType, AliasesParse) {
  EXPECT_EQ(parse_entity_type("documents"), EntityType::docs);
  EXPECT_EQ(parse_entity_type("topics"), EntityType::queries);
  EXPECT_EQ(parse_entity_type("judgments"), EntityType::qrels);
  EXPECT_EQ(parse_entity_type("scoreddocs"), EntityType::scoreddocs);
  EXPECT_FALSE(parse_entity_type("passages"));
}

}  // namespace
}  // namespace irds
