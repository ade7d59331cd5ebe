#pragma once

#include <cstdint>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

#include "irds/record.hpp"
#include "irds/stream.hpp"
#include "irds/text.hpp"

namespace irds {

enum class Encoding { utf8, latin1 };

enum class OutputFormat { tsv, jsonl, trec };

std::string_view to_string(OutputFormat format);
std::optional<OutputFormat> parse_output_format(std::string_view name);

struct ParseContext {
  std::string source_name = "<stream>";
  std::uint64_t line_number = 0;
  std::uint64_t byte_offset = 0;
};

struct ParseOptions {
  std::string source_name = "<stream>";
  Encoding encoding = Encoding::utf8;
  /// Apply fix_double_encoding() to text fields.
  bool repair_double_encoding = false;
};

using InputPtr = std::shared_ptr<std::istream>;

/// TAB-separated lines; each nonempty line must have exactly schema.size()
/// fields.
RecordStream parse_tsv(InputPtr in, SchemaPtr schema, ParseOptions options = {});

/// RFC-4180 CSV (quoted fields, "" escapes, embedded newlines), mapped onto
/// the schema by position. With `header`, the first row is skipped.
RecordStream parse_csv(InputPtr in, SchemaPtr schema, bool header, ParseOptions options = {});

/// "qid iteration docid relevance" whitespace-separated lines.
RecordStream parse_trec_qrels(InputPtr in, ParseOptions options = {});

/// "qid Q0 docid rank score tag" run lines.
RecordStream parse_trec_run(InputPtr in, ParseOptions options = {});

/// <DOC> ... </DOC> blocks. doc_id is the trimmed DOCNO content; text is the
/// rest of the block with all tags removed and outer whitespace trimmed.
RecordStream parse_trec_docs(InputPtr in, ParseOptions options = {});

/// Classic <top> topics into (query_id, title, description, narrative).
RecordStream parse_trec_topics(InputPtr in, ParseOptions options = {});
SchemaPtr trec_topics_schema();

/// One JSON object per line; values are looked up by schema field name.
RecordStream parse_jsonl(InputPtr in, SchemaPtr schema, ParseOptions options = {});

/// One output line, without the trailing LF.
///
/// tsv replaces TAB/LF/CR inside values with a single space. trec is defined
/// for qrels and scoreddocs only; other entity types throw
/// Error(unsupported_format).
std::string serialize(const Record& record, OutputFormat format);

/// serialize() followed by LF.
void write_record(std::ostream& out, const Record& record, OutputFormat format);

/// Default output format for an entity type (trec for qrels/scoreddocs).
OutputFormat default_format(EntityType type);

}  // namespace irds
