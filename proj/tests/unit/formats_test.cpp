#include <gtest/gtest.h>

#include <sstream>

#include "irds/errors.hpp"
#include "irds/formats.hpp"
#include "irds/io.hpp"
#include "test_support.hpp"

namespace irds {
namespace {

using testing::Rng;
using testing::uniform;

InputPtr text_input(std::string s) { return std::make_shared<std::istringstream>(std::move(s)); }

std::vector<Record> tsv(const std::string& s, SchemaPtr schema, ParseOptions opts = {}) {
  return collect(parse_tsv(text_input(s), std::move(schema), std::move(opts)));
}

Record make(SchemaPtr schema, std::vector<Value> values) {
  return Record(std::move(schema), std::move(values));
}

template <typename F>
ParseError expect_parse_error(F&& f) {
  try {
    f();
  } catch (const ParseError& e) {
    return e;
  }
  ADD_FAILURE() << "expected ParseError";
  return ParseError("", 0, 0, "");
}

TEST(Tsv, MsmarcoQueryLine) {
  const auto records = tsv("121352\tdefine extreme\n", Schema::generic_queries());
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0], make(Schema::generic_queries(),
                             {std::string("121352"), std::string("define extreme")}));
}

TEST(Tsv, EmptyStreamAndBlankLines) {
  EXPECT_TRUE(tsv("", Schema::generic_queries()).empty());
  EXPECT_EQ(tsv("\n1\ta\n\n2\tb\n", Schema::generic_queries()).size(), 2u);
}

TEST(Tsv, ArityErrorReportsLine) {
  const auto e = expect_parse_error(
      [] { tsv("1\ta\n2\tb\tc\n", Schema::generic_queries()); });
  EXPECT_EQ(e.line(), 2u);
  EXPECT_EQ(e.byte_offset(), 4u);
  EXPECT_NE(std::string(e.what()).find("field count"), std::string::npos);
}

TEST(Tsv, CoercionFailureIsParseError) {
  expect_parse_error([] { tsv("q\t0\td\thigh\n", Schema::trec_qrels()); });
  const auto ok = tsv("q\t0\td\t-1\n", Schema::trec_qrels());
  EXPECT_EQ(ok[0].integer("relevance"), -1);
}

TEST(Tsv, StripsCarriageReturns) {
  const auto r = tsv("1\ta\r\n2\tb\r\n", Schema::generic_queries());
  EXPECT_EQ(r[1].str("text"), "b");
}

TEST(Tsv, ReplacesMalformedUtf8AndCounts) {
  auto stream = parse_tsv(text_input("1\ta\xFFz\n2\tok\n"), Schema::generic_queries());
  const auto first = stream.next();
  EXPECT_EQ(first->str("text"), "a\xEF\xBF\xBDz");
  while (stream.next()) {
  }
  EXPECT_EQ(stream.stats().replaced_sequences, 1u);
  EXPECT_EQ(stream.stats().records, 2u);
}

TEST(Tsv, Latin1AndRepairOptions) {
  ParseOptions latin1;
  latin1.encoding = Encoding::latin1;
  EXPECT_EQ(tsv("1\tr\xE9gime\n", Schema::generic_docs(), latin1)[0].str("text"),
            "r\xC3\xA9gime");

  ParseOptions repair;
  repair.repair_double_encoding = true;
  const auto mojibake = testing::latin1_misdecode("caf\xC3\xA9");
  EXPECT_EQ(tsv("1\t" + mojibake + "\n", Schema::generic_docs(), repair)[0].str("text"),
            "caf\xC3\xA9");
  EXPECT_EQ(tsv("1\t" + mojibake + "\n", Schema::generic_docs())[0].str("text"), mojibake);
}

TEST(Csv, QuotedFieldsAndHeader) {
  const std::string csv =
      "doc_id,text\n"
      "d1,plain\n"
      "d2,\"with, comma\"\n"
      "d3,\"say \"\"hi\"\"\"\n"
      "d4,\"two\nlines\"\n";
  const auto r = collect(parse_csv(text_input(csv), Schema::generic_docs(), true));
  ASSERT_EQ(r.size(), 4u);
  EXPECT_EQ(r[1].str("text"), "with, comma");
  EXPECT_EQ(r[2].str("text"), "say \"hi\"");
  EXPECT_EQ(r[3].str("text"), "two\nlines");
  expect_parse_error([] {
    collect(parse_csv(text_input("d1,\"open\n"), Schema::generic_docs(), false));
  });
  expect_parse_error(
      [] { collect(parse_csv(text_input("d1,a,b\n"), Schema::generic_docs(), false)); });
}

TEST(Qrels, Examples) {
  auto r = collect(parse_trec_qrels(text_input("1185869 0 0 1\nq1 0 d1 -2\n")));
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0], make(Schema::trec_qrels(), {std::string("1185869"), std::string("0"),
                                              std::string("0"), std::int64_t{1}}));
  EXPECT_EQ(r[1].integer("relevance"), -2);
  expect_parse_error([] { collect(parse_trec_qrels(text_input("q1 d1 1\n"))); });
  expect_parse_error([] { collect(parse_trec_qrels(text_input("q1 0 d1 yes\n"))); });
}

TEST(Qrels, AcceptsTabsAndRunsOfSpaces) {
  auto r = collect(parse_trec_qrels(text_input("q1\t0   d1  2\n")));
  EXPECT_EQ(r[0].str("doc_id"), "d1");
  EXPECT_EQ(r[0].integer("relevance"), 2);
}

TEST(Run, Examples) {
  auto r = collect(parse_trec_run(text_input("q1 Q0 d5 1 12.5 sys\n")));
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0], make(Schema::trec_run(), {std::string("q1"), std::string("d5"),
                                            std::int64_t{1}, 12.5, std::string("sys")}));
  expect_parse_error([] { collect(parse_trec_run(text_input("q1 Q0 d5 1 twelve sys\n"))); });
  expect_parse_error([] { collect(parse_trec_run(text_input("q1 Q0 d5 1 1.0\n"))); });
  expect_parse_error([] { collect(parse_trec_run(text_input("q1 X d5 1 1.0 s\n"))); });
  EXPECT_TRUE(collect(parse_trec_run(text_input(""))).empty());
}

TEST(TrecDocs, Examples) {
  auto one = collect(parse_trec_docs(text_input("<DOC><DOCNO> d1 </DOCNO>hello</DOC>")));
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0], make(Schema::generic_docs(), {std::string("d1"), std::string("hello")}));

  auto two = collect(parse_trec_docs(text_input(
      "<DOC>\n<DOCNO>a</DOCNO>\n<TEXT>first  doc</TEXT>\n</DOC>\n"
      "<DOC>\n<DOCNO>b</DOCNO>\n<HEAD>x</HEAD> <TEXT>second</TEXT>\n</DOC>\n")));
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(two[0].id(), "a");
  EXPECT_EQ(two[0].str("text"), "first  doc");
  EXPECT_EQ(two[1].str("text"), "x second");

  expect_parse_error([] { collect(parse_trec_docs(text_input("<DOC>no docno</DOC>"))); });
  const auto e = expect_parse_error([] {
    collect(parse_trec_docs(text_input("<DOC><DOCNO>a</DOCNO></DOC>\n\n<DOC><DOCNO>b</DOCNO>")));
  });
  EXPECT_EQ(e.line(), 3u);
}

std::string random_trec_block(Rng& rng, std::string& id, std::string& body) {
  id = testing::random_id(rng, 1, 10);
  body = testing::english_text(rng, uniform(rng, 1, 300));
  while (!body.empty() && (body.back() == ' ' || body.front() == ' ')) {
    body = testing::english_text(rng, uniform(rng, 1, 300));
  }
  return "<DOC>\n<DOCNO> " + id + " </DOCNO>\n<TEXT>\n" + body + "\n</TEXT>\n</DOC>\n";
}

TEST(TrecDocs, ConcatenationProperty) {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    std::string a, b, id, body;
    std::vector<Record> expected;
    for (auto i = uniform(rng, 0, 5); i > 0; --i) {
      a += random_trec_block(rng, id, body);
      expected.push_back(make(Schema::generic_docs(), {id, body}));
    }
    for (auto i = uniform(rng, 0, 5); i > 0; --i) {
      b += random_trec_block(rng, id, body);
      expected.push_back(make(Schema::generic_docs(), {id, body}));
    }
    auto pa = collect(parse_trec_docs(text_input(a)));
    const auto pb = collect(parse_trec_docs(text_input(b)));
    pa.insert(pa.end(), pb.begin(), pb.end());
    EXPECT_EQ(collect(parse_trec_docs(text_input(a + b))), pa);
    EXPECT_EQ(pa, expected);
  }
}

TEST(TrecDocs, BlocksLargerThanTheReadBuffer) {
  Rng rng(8);
  const auto big = testing::english_text(rng, 300000);
  std::string trimmed = big;
  while (trimmed.back() == ' ') trimmed.pop_back();
  const auto r = collect(parse_trec_docs(
      text_input("junk<DOC><DOCNO>x</DOCNO>" + trimmed + "</DOC><DOC><DOCNO>y</DOCNO>z</DOC>")));
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].str("text"), trimmed);
  EXPECT_EQ(r[1].id(), "y");
}

TEST(TrecTopics, ClassicFormat) {
  const std::string topics =
      "<top>\n<num> Number: 301\n<title> International Organized Crime\n\n"
      "<desc> Description:\nIdentify organizations.\n\n"
      "<narr> Narrative:\nA relevant document must name one.\n</top>\n";
  const auto r = collect(parse_trec_topics(text_input(topics)));
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].id(), "301");
  EXPECT_EQ(r[0].str("title"), "International Organized Crime");
  EXPECT_EQ(r[0].str("description"), "Identify organizations.");
  EXPECT_EQ(r[0].str("narrative"), "A relevant document must name one.");
}

TEST(Jsonl, Examples) {
  const auto r = collect(parse_jsonl(
      text_input("{\"doc_id\":\"0\",\"text\":\"The presence of communication amid scientific\"}\n"
                 "{\"doc_id\":\"1\",\"text\":\"x\",\"extra\":true}\n"),
      Schema::generic_docs()));
  ASSERT_EQ(r.size(), 2u);
  EXPECT_TRUE(r[0].str("text").starts_with("The presence of commun"));
  EXPECT_EQ(r[1], make(Schema::generic_docs(), {std::string("1"), std::string("x")}));

  const auto e = expect_parse_error([] {
    collect(parse_jsonl(text_input("{\"text\":\"x\"}\n"), Schema::generic_docs()));
  });
  EXPECT_NE(std::string(e.what()).find("missing field doc_id"), std::string::npos);
  expect_parse_error(
      [] { collect(parse_jsonl(text_input("{\"doc_id\": \n"), Schema::generic_docs())); });
  expect_parse_error(
      [] { collect(parse_jsonl(text_input("[1,2]\n"), Schema::generic_docs())); });
}

TEST(Serialize, Examples) {
  EXPECT_EQ(serialize(make(Schema::trec_qrels(), {std::string("1185869"), std::string("0"),
                                                  std::string("0"), std::int64_t{1}}),
                      OutputFormat::trec),
            "1185869 0 0 1");
  EXPECT_EQ(serialize(make(Schema::generic_docs(), {std::string("0"), std::string("a\tb")}),
                      OutputFormat::tsv),
            "0\ta b");
  EXPECT_EQ(serialize(make(Schema::generic_docs(), {std::string("0"), std::string("a\r\nb")}),
                      OutputFormat::tsv),
            "0\ta  b");
  EXPECT_EQ(serialize(make(Schema::trec_run(), {std::string("q1"), std::string("d5"),
                                                std::int64_t{1}, 12.5, std::string("sys")}),
                      OutputFormat::trec),
            "q1 Q0 d5 1 12.5 sys");
  EXPECT_EQ(serialize(make(Schema::generic_docs(), {std::string("0"), std::string("\"q\"")}),
                      OutputFormat::jsonl),
            R"({"doc_id":"0","text":"\"q\""})");
  const auto pair = make(Schema::docpairs(), {std::string("q"), std::string("a"), std::string("b")});
  try {
    serialize(pair, OutputFormat::trec);
    FAIL() << "expected unsupported_format";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::unsupported_format);
  }
}

std::string random_plain_text(Rng& rng) {
  std::string s = testing::random_unicode(rng, uniform(rng, 0, 30));
  for (auto& c : s) {
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

TEST(RoundTrip, TsvJsonlAndTrecQrels) {
  Rng rng(404);
  const auto docs = Schema::make(EntityType::docs, {{"doc_id", FieldKind::id_string},
                                                    {"title", FieldKind::text},
                                                    {"year", FieldKind::integer},
                                                    {"score", FieldKind::floating},
                                                    {"tags", FieldKind::id_string_list}});
  for (int i = 0; i < 300; ++i) {
    std::vector<std::string> tags(uniform(rng, 0, 3));
    for (auto& t : tags) t = testing::random_id(rng, 1, 6);
    const auto r = make(docs, {testing::random_id(rng, 1, 12), random_plain_text(rng),
                               static_cast<std::int64_t>(rng()),
                               static_cast<double>(static_cast<std::int32_t>(rng())) / 64.0, tags});
    for (auto fmt : {OutputFormat::tsv, OutputFormat::jsonl}) {
      const auto line = serialize(r, fmt) + "\n";
      const auto back = fmt == OutputFormat::tsv ? collect(parse_tsv(text_input(line), docs))
                                                 : collect(parse_jsonl(text_input(line), docs));
      ASSERT_EQ(back.size(), 1u);
      ASSERT_EQ(back[0], r) << line;
    }
    const auto q = make(Schema::trec_qrels(),
                        {testing::random_id(rng, 1, 8), std::string("0"),
                         testing::random_id(rng, 1, 8),
                         static_cast<std::int64_t>(uniform(rng, 0, 6)) - 2});
    const auto qback = collect(parse_trec_qrels(text_input(serialize(q, OutputFormat::trec))));
    ASSERT_EQ(qback.size(), 1u);
    ASSERT_EQ(qback[0], q);
  }
}

TEST(Streaming, ContextIsMonotone) {
  std::string input;
  for (int i = 0; i < 1000; ++i) input += std::to_string(i) + "\tline " + std::to_string(i) + "\n";
  input += "bad line\n";
  const auto e = expect_parse_error([&] { tsv(input, Schema::generic_queries()); });
  EXPECT_EQ(e.line(), 1001u);
  EXPECT_EQ(e.byte_offset(), input.size() - 9);
}

TEST(Streaming, ReadsGzipInputTransparently) {
  testing::TempDir dir;
  testing::write_gzip(dir / "q.tsv.gz", "1\tone\n2\ttwo\n", 6, 2);
  const auto r = collect(parse_tsv(open_input(dir / "q.tsv.gz"), Schema::generic_queries()));
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[1].str("text"), "two");
}

TEST(OutputFormats, Defaults) {
  EXPECT_EQ(default_format(EntityType::docs), OutputFormat::tsv);
  EXPECT_EQ(default_format(EntityType::queries), OutputFormat::tsv);
  EXPECT_EQ(default_format(EntityType::docpairs), OutputFormat::tsv);
  EXPECT_EQ(default_format(EntityType::qrels), OutputFormat::trec);
  EXPECT_EQ(default_format(EntityType::scoreddocs), OutputFormat::trec);
  EXPECT_EQ(parse_output_format("jsonl"), OutputFormat::jsonl);
  EXPECT_FALSE(parse_output_format("xml"));
}

}  // namespace
}  // namespace irds
