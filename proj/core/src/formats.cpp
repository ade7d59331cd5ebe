#include "irds/formats.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <vector>

#include <json.hpp>

#include "irds/errors.hpp"

namespace irds {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(OutputFormat format) {
  switch (format) {
    case OutputFormat::tsv: return "tsv";
    case OutputFormat::jsonl: return "jsonl";
    case OutputFormat::trec: return "trec";
  }
  return "?";
}

std::optional<OutputFormat> parse_output_format(std::string_view name) {
  if (name == "tsv") return OutputFormat::tsv;
  if (name == "jsonl" || name == "json") return OutputFormat::jsonl;
  if (name == "trec") return OutputFormat::trec;
  return std::nullopt;
}

OutputFormat default_format(EntityType type) {
  return type == EntityType::qrels || type == EntityType::scoreddocs ? OutputFormat::trec
                                                                     : OutputFormat::tsv;
}

namespace {

constexpr std::string_view whitespace = " \t\r\n\f\v";

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(whitespace);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(whitespace);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && whitespace.find(s[i]) != std::string_view::npos) ++i;
    if (i >= s.size()) break;
    std::size_t j = i;
    while (j < s.size() && whitespace.find(s[j]) == std::string_view::npos) ++j;
    out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

// Decoding shared by every parser: Latin-1 transcoding or UTF-8 repair.
class Decoder {
 public:
  explicit Decoder(const ParseOptions& options) : options_(options) {}

  std::string decode(std::string_view raw) {
    if (options_.encoding == Encoding::latin1) return latin1_to_utf8(raw);
    if (is_valid_utf8(raw)) return std::string(raw);
    std::size_t replaced = 0;
    auto out = sanitize_utf8(raw, replaced);
    replaced_ += replaced;
    return out;
  }

  std::string text_field(std::string value) const {
    return options_.repair_double_encoding ? fix_double_encoding(value) : value;
  }

  std::uint64_t replaced() const noexcept { return replaced_; }

 private:
  const ParseOptions& options_;
  std::uint64_t replaced_ = 0;
};

class LineSource {
 public:
  LineSource(InputPtr in, ParseOptions options)
      : in_(std::move(in)), options_(std::move(options)), decoder_(options_) {
    context_.source_name = options_.source_name;
  }

  // Next line (LF stripped, trailing CR stripped), decoded to UTF-8.
  bool next_line(std::string& line) {
    if (!std::getline(*in_, raw_)) {
      if (in_->bad()) fail("read error");
      return false;
    }
    context_.byte_offset = next_offset_;
    context_.line_number += 1;
    next_offset_ += raw_.size() + (in_->eof() ? 0 : 1);
    std::string_view view = raw_;
    if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
    line = decoder_.decode(view);
    return true;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(context_.source_name, context_.line_number, context_.byte_offset, what);
  }

  Decoder& decoder() { return decoder_; }
  const ParseContext& context() const { return context_; }

 private:
  InputPtr in_;
  ParseOptions options_;
  Decoder decoder_;
  ParseContext context_;
  std::string raw_;
  std::uint64_t next_offset_ = 0;
};

Value coerce_or_fail(LineSource& src, std::string_view text, const FieldSpec& spec) {
  auto value = coerce(text, spec.kind);
  if (!value) {
    src.fail("cannot convert '" + std::string(text) + "' to " + std::string(to_string(spec.kind)) +
             " for field " + spec.name);
  }
  if (spec.kind == FieldKind::text) {
    return src.decoder().text_field(std::get<std::string>(std::move(*value)));
  }
  return std::move(*value);
}

class TsvReader : public RecordReader {
 public:
  TsvReader(InputPtr in, SchemaPtr schema, ParseOptions options)
      : src_(std::move(in), std::move(options)), schema_(std::move(schema)) {}

  std::optional<Record> next() override {
    std::string line;
    while (src_.next_line(line)) {
      if (line.empty()) continue;
      std::vector<std::string_view> parts;
      std::size_t start = 0;
      while (true) {
        auto tab = line.find('\t', start);
        if (tab == std::string::npos) {
          parts.emplace_back(line.data() + start, line.size() - start);
          break;
        }
        parts.emplace_back(line.data() + start, tab - start);
        start = tab + 1;
      }
      if (parts.size() != schema_->size()) {
        src_.fail("field count mismatch: expected " + std::to_string(schema_->size()) + ", got " +
                  std::to_string(parts.size()));
      }
      std::vector<Value> values;
      values.reserve(parts.size());
      for (std::size_t i = 0; i < parts.size(); ++i) {
        values.push_back(coerce_or_fail(src_, parts[i], schema_->field(i)));
      }
      ++records_;
      return Record(schema_, std::move(values));
    }
    return std::nullopt;
  }

  ParseStats stats() const override { return {records_, src_.decoder().replaced()}; }

 private:
  mutable LineSource src_;
  SchemaPtr schema_;
  std::uint64_t records_ = 0;
};

class QrelsReader : public RecordReader {
 public:
  QrelsReader(InputPtr in, ParseOptions options) : src_(std::move(in), std::move(options)) {}

  std::optional<Record> next() override {
    static const auto schema = Schema::trec_qrels();
    std::string line;
    while (src_.next_line(line)) {
      auto cols = split_ws(line);
      if (cols.empty()) continue;
      if (cols.size() != 4) {
        src_.fail("expected 4 columns in qrels line, got " + std::to_string(cols.size()));
      }
      auto rel = coerce(cols[3], FieldKind::integer);
      if (!rel) src_.fail("relevance '" + std::string(cols[3]) + "' is not an integer");
      ++records_;
      return Record(schema, {std::string(cols[0]), std::string(cols[1]), std::string(cols[2]),
                             std::move(*rel)});
    }
    return std::nullopt;
  }

  ParseStats stats() const override { return {records_, src_.decoder().replaced()}; }

 private:
  mutable LineSource src_;
  std::uint64_t records_ = 0;
};

class RunReader : public RecordReader {
 public:
  RunReader(InputPtr in, ParseOptions options) : src_(std::move(in), std::move(options)) {}

  std::optional<Record> next() override {
    static const auto schema = Schema::trec_run();
    std::string line;
    while (src_.next_line(line)) {
      auto cols = split_ws(line);
      if (cols.empty()) continue;
      if (cols.size() != 6) {
        src_.fail("expected 6 columns in run line, got " + std::to_string(cols.size()));
      }
      if (cols[1] != "Q0" && cols[1] != "q0" && cols[1] != "0") {
        src_.fail("second run column must be Q0, got '" + std::string(cols[1]) + "'");
      }
      auto rank = coerce(cols[3], FieldKind::integer);
      if (!rank) src_.fail("rank '" + std::string(cols[3]) + "' is not an integer");
      auto score = coerce(cols[4], FieldKind::floating);
      if (!score) src_.fail("score '" + std::string(cols[4]) + "' is not a number");
      ++records_;
      return Record(schema, {std::string(cols[0]), std::string(cols[2]), std::move(*rank),
                             std::move(*score), std::string(cols[5])});
    }
    return std::nullopt;
  }

  ParseStats stats() const override { return {records_, src_.decoder().replaced()}; }

 private:
  mutable LineSource src_;
  std::uint64_t records_ = 0;
};

class JsonlReader : public RecordReader {
 public:
  JsonlReader(InputPtr in, SchemaPtr schema, ParseOptions options)
      : src_(std::move(in), std::move(options)), schema_(std::move(schema)) {}

  std::optional<Record> next() override {
    std::string line;
    while (src_.next_line(line)) {
      if (trim(line).empty()) continue;
      json obj;
      try {
        obj = json::parse(line);
      } catch (const json::parse_error& e) {
        src_.fail(std::string("malformed JSON: ") + e.what());
      }
      if (!obj.is_object()) src_.fail("JSON line is not an object");
      std::vector<Value> values;
      values.reserve(schema_->size());
      for (const auto& spec : schema_->fields()) {
        auto it = obj.find(spec.name);
        if (it == obj.end() || it->is_null()) src_.fail("missing field " + spec.name);
        values.push_back(convert(*it, spec));
      }
      ++records_;
      return Record(schema_, std::move(values));
    }
    return std::nullopt;
  }

  ParseStats stats() const override { return {records_, src_.decoder().replaced()}; }

 private:
  [[noreturn]] void kind_mismatch(const FieldSpec& spec) {
    src_.fail("field " + spec.name + " is not of kind " + std::string(to_string(spec.kind)));
  }

  Value convert(const json& v, const FieldSpec& spec) {
    auto mismatch = [&]() { kind_mismatch(spec); };
    switch (spec.kind) {
      case FieldKind::id_string:
        if (v.is_string()) return v.get<std::string>();
        if (v.is_number_integer()) return v.dump();
        kind_mismatch(spec);
      case FieldKind::text:
        if (!v.is_string()) mismatch();
        return src_.decoder().text_field(v.get<std::string>());
      case FieldKind::integer:
        if (!v.is_number_integer()) mismatch();
        return v.get<std::int64_t>();
      case FieldKind::floating:
        if (!v.is_number()) mismatch();
        return v.get<double>();
      case FieldKind::id_string_list: {
        if (!v.is_array()) mismatch();
        std::vector<std::string> out;
        for (const auto& e : v) {
          if (!e.is_string()) mismatch();
          out.push_back(e.get<std::string>());
        }
        return out;
      }
    }
    kind_mismatch(spec);
  }

  mutable LineSource src_;
  SchemaPtr schema_;
  std::uint64_t records_ = 0;
};

// Scans for <open> ... <close> blocks with bounded buffering.
class BlockScanner {
 public:
  BlockScanner(InputPtr in, ParseOptions options, std::string open, std::string close)
      : in_(std::move(in)),
        options_(std::move(options)),
        decoder_(options_),
        open_(std::move(open)),
        close_(std::move(close)) {
    context_.source_name = options_.source_name;
    context_.line_number = 1;
  }

  // Raw (undecoded) content between the tags of the next block.
  std::optional<std::string> next_block() {
    std::size_t search = pos_;
    while (true) {
      auto p = buf_.find(open_, search);
      if (p != std::string::npos) {
        advance_to(p);
        block_context_ = context_;
        advance_to(p + open_.size());
        break;
      }
      const std::size_t keep = open_.size() - 1;
      advance_to(std::max(pos_, buf_.size() > keep ? buf_.size() - keep : 0));
      search = pos_;
      if (!fill()) return std::nullopt;
    }
    search = pos_;
    while (true) {
      auto q = buf_.find(close_, search);
      if (q != std::string::npos) {
        std::string content = buf_.substr(pos_, q - pos_);
        advance_to(q + close_.size());
        return content;
      }
      search = std::max(pos_, buf_.size() >= close_.size() ? buf_.size() - close_.size() + 1 : 0);
      if (!fill()) fail_block(open_ + " without " + close_ + " before end of input");
    }
  }

  [[noreturn]] void fail_block(const std::string& what) const {
    throw ParseError(block_context_.source_name, block_context_.line_number,
                     block_context_.byte_offset, what);
  }

  Decoder& decoder() { return decoder_; }

 private:
  bool fill() {
    if (pos_ > 0) {
      buf_.erase(0, pos_);
      pos_ = 0;
    }
    std::array<char, 1 << 16> chunk;
    in_->read(chunk.data(), chunk.size());
    const auto got = in_->gcount();
    if (got <= 0) {
      if (in_->bad()) fail_block("read error");
      return false;
    }
    buf_.append(chunk.data(), static_cast<std::size_t>(got));
    return true;
  }

  void advance_to(std::size_t p) {
    context_.line_number += std::count(buf_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                       buf_.begin() + static_cast<std::ptrdiff_t>(p), '\n');
    context_.byte_offset += p - pos_;
    pos_ = p;
  }

  InputPtr in_;
  ParseOptions options_;
  Decoder decoder_;
  std::string open_;
  std::string close_;
  std::string buf_;
  std::size_t pos_ = 0;
  ParseContext context_;
  ParseContext block_context_;
};

std::string strip_tags(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == '<') {
      auto close = s.find('>', i + 1);
      if (close != std::string_view::npos) {
        i = close + 1;
        continue;
      }
    }
    out.push_back(s[i]);
    ++i;
  }
  return out;
}

class TrecDocsReader : public RecordReader {
 public:
  TrecDocsReader(InputPtr in, ParseOptions options)
      : scanner_(std::move(in), std::move(options), "<DOC>", "</DOC>") {}

  std::optional<Record> next() override {
    static const auto schema = Schema::generic_docs();
    auto block = scanner_.next_block();
    if (!block) return std::nullopt;
    const std::string content = scanner_.decoder().decode(*block);
    const auto open = content.find("<DOCNO>");
    if (open == std::string::npos) scanner_.fail_block("missing <DOCNO>");
    const auto close = content.find("</DOCNO>", open);
    if (close == std::string::npos) scanner_.fail_block("unterminated <DOCNO>");
    std::string id(trim(std::string_view(content).substr(open + 7, close - open - 7)));
    if (id.empty()) scanner_.fail_block("empty <DOCNO>");
    std::string rest = content.substr(0, open) + content.substr(close + 8);
    std::string text(trim(strip_tags(rest)));
    ++records_;
    return Record(schema, {std::move(id), scanner_.decoder().text_field(std::move(text))});
  }

  ParseStats stats() const override { return {records_, scanner_.decoder().replaced()}; }

 private:
  mutable BlockScanner scanner_;
  std::uint64_t records_ = 0;
};

class TopicsReader : public RecordReader {
 public:
  TopicsReader(InputPtr in, ParseOptions options)
      : scanner_(std::move(in), std::move(options), "<top>", "</top>") {}

  std::optional<Record> next() override {
    auto block = scanner_.next_block();
    if (!block) return std::nullopt;
    const std::string content = scanner_.decoder().decode(*block);
    static constexpr std::array<std::string_view, 4> tags = {"<num>", "<title>", "<desc>",
                                                             "<narr>"};
    std::array<std::size_t, 4> at{};
    for (std::size_t i = 0; i < tags.size(); ++i) at[i] = content.find(tags[i]);
    if (at[0] == std::string::npos) scanner_.fail_block("topic without <num>");

    auto section = [&](std::size_t i, std::string_view prefix) -> std::string {
      if (at[i] == std::string::npos) return {};
      const std::size_t begin = at[i] + tags[i].size();
      std::size_t end = content.size();
      for (std::size_t j = 0; j < tags.size(); ++j) {
        if (at[j] != std::string::npos && at[j] > at[i]) end = std::min(end, at[j]);
      }
      std::string body(trim(strip_tags(std::string_view(content).substr(begin, end - begin))));
      std::string_view v = body;
      if (v.starts_with(prefix)) v = trim(v.substr(prefix.size()));
      return std::string(v);
    };

    std::string id = section(0, "Number:");
    if (id.empty()) scanner_.fail_block("empty topic number");
    auto& dec = scanner_.decoder();
    ++records_;
    return Record(trec_topics_schema(),
                  {std::move(id), dec.text_field(section(1, "Topic:")),
                   dec.text_field(section(2, "Description:")),
                   dec.text_field(section(3, "Narrative:"))});
  }

  ParseStats stats() const override { return {records_, scanner_.decoder().replaced()}; }

 private:
  mutable BlockScanner scanner_;
  std::uint64_t records_ = 0;
};

class CsvReader : public RecordReader {
 public:
  CsvReader(InputPtr in, SchemaPtr schema, bool header, ParseOptions options)
      : in_(std::move(in)),
        options_(std::move(options)),
        decoder_(options_),
        schema_(std::move(schema)),
        skip_header_(header) {
    context_.source_name = options_.source_name;
  }

  std::optional<Record> next() override {
    std::vector<std::string> row;
    while (read_row(row)) {
      if (skip_header_) {
        skip_header_ = false;
        continue;
      }
      if (row.size() == 1 && row[0].empty()) continue;
      if (row.size() != schema_->size()) {
        fail("field count mismatch: expected " + std::to_string(schema_->size()) + ", got " +
             std::to_string(row.size()));
      }
      std::vector<Value> values;
      values.reserve(row.size());
      for (std::size_t i = 0; i < row.size(); ++i) {
        const auto& spec = schema_->field(i);
        auto text = decoder_.decode(row[i]);
        auto value = coerce(text, spec.kind);
        if (!value) fail("cannot convert '" + text + "' for field " + spec.name);
        if (spec.kind == FieldKind::text) {
          value = decoder_.text_field(std::get<std::string>(std::move(*value)));
        }
        values.push_back(std::move(*value));
      }
      ++records_;
      return Record(schema_, std::move(values));
    }
    return std::nullopt;
  }

  ParseStats stats() const override { return {records_, decoder_.replaced()}; }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(context_.source_name, row_line_, row_offset_, what);
  }

  int get() {
    int c = in_->get();
    if (c != std::char_traits<char>::eof()) {
      ++offset_;
      if (c == '\n') ++line_;
    }
    return c;
  }

  bool read_row(std::vector<std::string>& row) {
    row.clear();
    constexpr int eof = std::char_traits<char>::eof();
    if (in_->peek() == eof) return false;
    row_line_ = line_ + 1;
    row_offset_ = offset_;
    std::string field;
    bool quoted = false;
    bool field_started_quoted = false;
    while (true) {
      int c = get();
      if (quoted) {
        if (c == eof) fail("unterminated quoted field");
        if (c == '"') {
          if (in_->peek() == '"') {
            get();
            field.push_back('"');
          } else {
            quoted = false;
          }
        } else {
          field.push_back(static_cast<char>(c));
        }
        continue;
      }
      if (c == '"' && field.empty() && !field_started_quoted) {
        quoted = true;
        field_started_quoted = true;
      } else if (c == ',') {
        row.push_back(std::move(field));
        field.clear();
        field_started_quoted = false;
      } else if (c == '\n' || c == eof) {
        if (!field.empty() && field.back() == '\r' && !field_started_quoted) field.pop_back();
        row.push_back(std::move(field));
        return true;
      } else if (c == '\r' && field_started_quoted) {
        // CR of a CRLF after a closing quote.
      } else {
        field.push_back(static_cast<char>(c));
      }
    }
  }

  InputPtr in_;
  ParseOptions options_;
  Decoder decoder_;
  SchemaPtr schema_;
  bool skip_header_;
  ParseContext context_;
  std::uint64_t line_ = 0;
  std::uint64_t offset_ = 0;
  std::uint64_t row_line_ = 0;
  std::uint64_t row_offset_ = 0;
  std::uint64_t records_ = 0;
};

std::string tsv_clean(std::string s) {
  for (auto& c : s) {
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

ordered_json to_json(const Value& v) {
  return std::visit([](const auto& x) { return ordered_json(x); }, v);
}

std::string field_or(const Record& r, std::string_view name, std::string fallback) {
  if (auto idx = r.schema().index_of(name)) return value_text(r.at(*idx));
  return fallback;
}

}  // namespace

SchemaPtr trec_topics_schema() {
  static const auto schema = Schema::make(EntityType::queries,
                                          {{"query_id", FieldKind::id_string},
                                           {"title", FieldKind::text},
                                           {"description", FieldKind::text},
                                           {"narrative", FieldKind::text}});
  return schema;
}

RecordStream parse_tsv(InputPtr in, SchemaPtr schema, ParseOptions options) {
  return RecordStream(std::make_unique<TsvReader>(std::move(in), std::move(schema),
                                                  std::move(options)));
}

RecordStream parse_csv(InputPtr in, SchemaPtr schema, bool header, ParseOptions options) {
  return RecordStream(std::make_unique<CsvReader>(std::move(in), std::move(schema), header,
                                                  std::move(options)));
}

RecordStream parse_trec_qrels(InputPtr in, ParseOptions options) {
  return RecordStream(std::make_unique<QrelsReader>(std::move(in), std::move(options)));
}

RecordStream parse_trec_run(InputPtr in, ParseOptions options) {
  return RecordStream(std::make_unique<RunReader>(std::move(in), std::move(options)));
}

RecordStream parse_trec_docs(InputPtr in, ParseOptions options) {
  return RecordStream(std::make_unique<TrecDocsReader>(std::move(in), std::move(options)));
}

RecordStream parse_trec_topics(InputPtr in, ParseOptions options) {
  return RecordStream(std::make_unique<TopicsReader>(std::move(in), std::move(options)));
}

RecordStream parse_jsonl(InputPtr in, SchemaPtr schema, ParseOptions options) {
  return RecordStream(std::make_unique<JsonlReader>(std::move(in), std::move(schema),
                                                    std::move(options)));
}

std::string serialize(const Record& record, OutputFormat format) {
  const auto& schema = record.schema();
  switch (format) {
    case OutputFormat::tsv: {
      std::string line;
      for (std::size_t i = 0; i < record.size(); ++i) {
        if (i > 0) line.push_back('\t');
        line += tsv_clean(value_text(record.at(i)));
      }
      return line;
    }
    case OutputFormat::jsonl: {
      ordered_json obj = ordered_json::object();
      for (std::size_t i = 0; i < record.size(); ++i) {
        obj[schema.field(i).name] = to_json(record.at(i));
      }
      return obj.dump(-1, ' ', false, ordered_json::error_handler_t::replace);
    }
    case OutputFormat::trec: {
      const auto type = schema.entity_type();
      if (type == EntityType::qrels && schema.index_of("query_id") && schema.index_of("doc_id") &&
          schema.index_of("relevance")) {
        return record.str("query_id") + ' ' + field_or(record, "iteration", "0") + ' ' +
               record.str("doc_id") + ' ' + value_text(record.get("relevance"));
      }
      if (type == EntityType::scoreddocs && schema.index_of("query_id") &&
          schema.index_of("doc_id") && schema.index_of("score")) {
        return record.str("query_id") + " Q0 " + record.str("doc_id") + ' ' +
               field_or(record, "rank", "0") + ' ' + value_text(record.get("score")) + ' ' +
               field_or(record, "tag", "irds");
      }
      throw Error(ErrorKind::unsupported_format,
                  "format trec is not supported for " + std::string(to_string(type)) +
                      (schema.projected() ? " (projected fields)" : ""));
    }
  }
  throw Error(ErrorKind::unsupported_format, "unknown format");
}

void write_record(std::ostream& out, const Record& record, OutputFormat format) {
  out << serialize(record, format) << '\n';
}

}  // namespace irds
