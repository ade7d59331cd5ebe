#include "irds/registry.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <regex>

#include "irds/docstore.hpp"
#include "irds/errors.hpp"
#include "irds/io.hpp"

#ifndef IRDS_DEFAULT_MIRROR
#define IRDS_DEFAULT_MIRROR "data/mirror"
#endif

namespace irds {

namespace fs = std::filesystem;

namespace {

enum class SourceFormat { tsv, jsonl, trec_docs, trec_topics, trec_qrels, trec_run };

struct FileDef {
  std::string name;
  std::string sha256;
  std::optional<std::string> manual_instructions;
};

struct EntityDef {
  EntityType type;
  std::string file;
  SourceFormat format;
  SchemaPtr schema;
  std::optional<std::uint64_t> count_hint;
  Encoding encoding = Encoding::utf8;
  bool repair_double_encoding = false;
};

struct BuiltinDef {
  std::string id;
  std::string description;
  std::optional<std::string> license_note;
  std::string citation;
  std::vector<FileDef> files;
  std::vector<EntityDef> entities;
};

RecordStream parse_source(InputPtr in, const EntityDef& def, ParseOptions opts) {
  opts.encoding = def.encoding;
  opts.repair_double_encoding = def.repair_double_encoding;
  switch (def.format) {
    case SourceFormat::tsv:
      return parse_tsv(std::move(in), def.schema, opts);
    case SourceFormat::jsonl:
      return parse_jsonl(std::move(in), def.schema, opts);
    case SourceFormat::trec_docs:
      return parse_trec_docs(std::move(in), opts);
    case SourceFormat::trec_topics:
      return parse_trec_topics(std::move(in), opts);
    case SourceFormat::trec_qrels:
      return parse_trec_qrels(std::move(in), opts);
    case SourceFormat::trec_run:
      return parse_trec_run(std::move(in), opts);
  }
  throw Error(ErrorKind::unsupported_format, "unknown source format");
}

DocstoreFactory store_factory(fs::path dir, std::function<RecordStream()> docs, SchemaPtr schema) {
  return [dir = std::move(dir), docs = std::move(docs), schema = std::move(schema)] {
    DocstoreBuildOptions opts;
    opts.schema = schema;
    return std::shared_ptr<const Docstore>(Docstore::open_or_build(dir, docs, opts));
  };
}

DatasetHandle make_builtin(const BuiltinDef& def, const Environment& env) {
  std::map<std::string, DownloadSpec> specs;
  for (const auto& f : def.files) {
    DownloadSpec spec;
    spec.dest = fs::path(def.id) / f.name;
    spec.sha256 = f.sha256;
    if (f.manual_instructions) {
      spec.manual_instructions = *f.manual_instructions;
    } else {
      spec.url = env.mirror + "/" + def.id + "/" + f.name;
      spec.license_notice = def.license_note;
    }
    specs.emplace(f.name, std::move(spec));
  }

  std::map<EntityType, EntityProvider> providers;
  for (const auto& e : def.entities) {
    const auto& spec = specs.at(e.file);
    EntityProvider p;
    p.schema = e.format == SourceFormat::trec_docs     ? Schema::generic_docs()
               : e.format == SourceFormat::trec_topics ? trec_topics_schema()
               : e.format == SourceFormat::trec_qrels  ? Schema::trec_qrels()
               : e.format == SourceFormat::trec_run    ? Schema::trec_run()
                                                       : e.schema;
    p.count_hint = e.count_hint;
    p.sources = {spec};
    p.open_iter = [spec, e, fetch = env.fetch] {
      const auto result = ensure_file(spec, fetch);
      ParseOptions opts;
      opts.source_name = result.path.string();
      return parse_source(open_input(result.path), e, opts);
    };
    providers.emplace(e.type, std::move(p));
  }

  DocstoreFactory store;
  if (auto it = providers.find(EntityType::docs); it != providers.end()) {
    store = store_factory(env.home / def.id / "docs.irds", it->second.open_iter, it->second.schema);
  }
  DatasetMetadata meta{def.description, def.license_note, def.citation, true};
  return DatasetHandle(def.id, std::move(meta), std::move(providers), std::move(store));
}

SchemaPtr schema(EntityType type, std::initializer_list<std::pair<const char*, FieldKind>> fields) {
  std::vector<FieldSpec> specs;
  for (const auto& [name, kind] : fields) specs.push_back({name, kind});
  return Schema::make(type, std::move(specs));
}

std::vector<BuiltinDef> builtin_defs() {
  using K = FieldKind;
  using T = EntityType;
  const auto docs = Schema::generic_docs();
  const auto queries = Schema::generic_queries();
  const auto none = SchemaPtr{};

  std::vector<BuiltinDef> defs;

  defs.push_back({"cord19",
                  "Scholarly articles about COVID-19 and related coronaviruses (fixture excerpt).",
                  std::nullopt,
                  "Wang et al. CORD-19: The COVID-19 Open Research Dataset. 2020.",
                  {{"metadata.jsonl", "d2311110cd0f522d8e71e4ec53fbd273eaa49502fe6df6ef11c005f49a3ebd1f", {}}},
                  {{T::docs, "metadata.jsonl", SourceFormat::jsonl,
                    schema(T::docs, {{"doc_id", K::id_string},
                                     {"title", K::text},
                                     {"doi", K::text},
                                     {"date", K::text},
                                     {"abstract", K::text}}),
                    6}}});

  defs.push_back({"cord19/trec-covid",
                  "TREC-COVID topics and judgments over the cord19 documents (fixture excerpt).",
                  std::nullopt,
                  "Voorhees et al. TREC-COVID: Constructing a Pandemic Information Retrieval Test "
                  "Collection. SIGIR Forum 2020.",
                  {{"topics.txt", "6c71c816397afc44eed7c4a39665853bcbbd46fbc175a088711caf5c178eebf1", {}},
                   {"qrels", "fb020dfbc493ea2cbb4bd1d30cc75c6ae8164dbbcdc5af2b0966f62d442842b2", {}}},
                  {{T::queries, "topics.txt", SourceFormat::trec_topics, none, 2},
                   {T::qrels, "qrels", SourceFormat::trec_qrels, none, 4}}});

  defs.push_back({"cranfield",
                  "Cranfield aeronautics abstracts (fixture excerpt).",
                  std::nullopt,
                  "Cleverdon. The Cranfield tests on index language devices. 1967.",
                  {{"docs.jsonl", "4a60c3d65b444adc6f5bc1e7d737e58286bfbf5942e09a85327f18f6155b581c", {}},
                   {"queries.tsv", "040c795f68fa2c9f81b6db4aa06bb60db8ffa10f7a1918df5ae180c7bddbd272", {}},
                   {"qrels", "cfcdba240637516809fd15c71329efd3847f0330b3878f4223cd01cc4acaf406", {}}},
                  {{T::docs, "docs.jsonl", SourceFormat::jsonl,
                    schema(T::docs, {{"doc_id", K::id_string},
                                     {"title", K::text},
                                     {"author", K::text},
                                     {"bib", K::text},
                                     {"text", K::text}}),
                    10},
                   {T::queries, "queries.tsv", SourceFormat::tsv, queries, 3},
                   {T::qrels, "qrels", SourceFormat::trec_qrels, none, 6}}});

  defs.push_back({"msmarco-passage",
                  "MS MARCO passage ranking collection (fixture excerpt).",
                  "MS MARCO is released for non-commercial research purposes only; see "
                  "https://microsoft.github.io/msmarco/ for the terms of use.",
                  "Bajaj et al. MS MARCO: A Human Generated MAchine Reading COmprehension Dataset. "
                  "2016.",
                  {{"collection.tsv", "23e0dea11ad8bbdb72614039d95033b596fbfc3b580e3d360429d4d1617947d0", {}}},
                  {{T::docs, "collection.tsv", SourceFormat::tsv, docs, 20, Encoding::utf8, true}}});

  defs.push_back({"msmarco-passage/dev",
                  "MS MARCO passage dev queries, judgments and a BM25 run (fixture excerpt).",
                  "MS MARCO is released for non-commercial research purposes only; see "
                  "https://microsoft.github.io/msmarco/ for the terms of use.",
                  "Bajaj et al. MS MARCO: A Human Generated MAchine Reading COmprehension Dataset. "
                  "2016.",
                  {{"queries.tsv", "a85338ec51b19049fdeef6b3c837ea64a7077d62ff86e9fdd685d5cdeb403566", {}},
                   {"qrels.txt", "1c649ff1fd4f321b51e2dcf171ed08426f8853bf4778bad5cd60b2e4c73fbb18", {}},
                   {"run.txt", "f79cfd1b38fb0a6606eac2b3e4b46a0961dc8002ce2ead637834cc63af4e4ebd", {}}},
                  {{T::queries, "queries.tsv", SourceFormat::tsv, queries, 3},
                   {T::qrels, "qrels.txt", SourceFormat::trec_qrels, none, 3},
                   {T::scoreddocs, "run.txt", SourceFormat::trec_run, none, 9}}});

  defs.push_back({"msmarco-passage/train",
                  "MS MARCO passage training queries, judgments and training triples (fixture "
                  "excerpt).",
                  "MS MARCO is released for non-commercial research purposes only; see "
                  "https://microsoft.github.io/msmarco/ for the terms of use.",
                  "Bajaj et al. MS MARCO: A Human Generated MAchine Reading COmprehension Dataset. "
                  "2016.",
                  {{"queries.tsv", "864d43eefc06490546b11b93b367d9bce58d4dce6f62551943fb518d85702b94", {}},
                   {"qrels.txt", "140681a9c67991d25fd27d509c4123c6f66dfa78444aa46d388086c8decefc5c", {}},
                   {"docpairs.tsv", "52bcff18f9e5cbd43fe03bd9a0f6342946efd9b9793cc1156986a474d31095cc", {}}},
                  {{T::queries, "queries.tsv", SourceFormat::tsv, queries, 5},
                   {T::qrels, "qrels.txt", SourceFormat::trec_qrels, none, 4},
                   {T::docpairs, "docpairs.tsv", SourceFormat::tsv, Schema::docpairs(), 4}}});

  defs.push_back({"trec-robust04",
                  "TREC 2004 Robust track topics and judgments; documents come from TREC disks 4 "
                  "and 5 and must be supplied manually.",
                  std::nullopt,
                  "Voorhees. Overview of the TREC 2004 Robust Retrieval Track. TREC 2004.",
                  {{"docs.sgml", "",
                    "Obtain TREC disks 4 and 5 from NIST (https://trec.nist.gov/data/cd45/), "
                    "concatenate the FBIS, FR94, FT and LATIMES documents into a single SGML file "
                    "and place it at this path."},
                   {"topics.txt", "cc2e77fbd576a79e9249a346c4078db87d569486e9977c7ee111211fc4b0263d", {}},
                   {"qrels", "f6b00c8fa4e538b35c9a22ce633d1bb7db29de30fcee5fbab1939c8cc57ee8c9", {}}},
                  {{T::docs, "docs.sgml", SourceFormat::trec_docs, none, std::nullopt},
                   {T::queries, "topics.txt", SourceFormat::trec_topics, none, 1},
                   {T::qrels, "qrels", SourceFormat::trec_qrels, none, 2}}});

  defs.push_back({"vaswani",
                  "Vaswani computer science abstracts (fixture excerpt, Latin-1 SGML, gzipped).",
                  std::nullopt,
                  "Vaswani and Cameron. A Dynamic Retrieval Process. 1970.",
                  {{"doc-text.sgml.gz", "9764e91a6143e5adc56752aa89c7c4e6376bd12657df8dd0de9b79767a317418", {}},
                   {"query-text.tsv", "d10ce129ecc96b0aeba1fbff2b4bfb4e323bf944a154240b7118dd8b8c59e148", {}},
                   {"qrels", "f0d0e11c6e897cdd1ae1ef16f634b78cf493b163a24528a736f9a0ad2ba1054e", {}}},
                  {{T::docs, "doc-text.sgml.gz", SourceFormat::trec_docs, none, 10, Encoding::latin1},
                   {T::queries, "query-text.tsv", SourceFormat::tsv, queries, 4},
                   {T::qrels, "qrels", SourceFormat::trec_qrels, none, 6}}});

  return defs;
}

std::vector<std::string> ancestors(std::string_view id) {
  std::vector<std::string> out;
  auto pos = id.rfind('/');
  while (pos != std::string_view::npos) {
    id = id.substr(0, pos);
    out.emplace_back(id);
    pos = id.rfind('/');
  }
  return out;
}

std::string file_stamp(const fs::path& p) {
  const auto size = fs::file_size(p);
  const auto mtime = fs::last_write_time(p).time_since_epoch().count();
  return std::to_string(size) + " " + std::to_string(mtime) + " " + fs::absolute(p).string();
}

}  // namespace

Environment Environment::from_env(const std::optional<fs::path>& home_override) {
  Environment env;
  if (home_override) {
    env.home = *home_override;
  } else if (const char* h = std::getenv("IRDS_HOME"); h && *h) {
    env.home = h;
  } else if (const char* user = std::getenv("HOME"); user && *user) {
    env.home = fs::path(user) / ".ir_datasets";
  } else {
    env.home = fs::current_path() / ".ir_datasets";
  }
  if (const char* m = std::getenv("IRDS_MIRROR"); m && *m) {
    env.mirror = m;
    while (!env.mirror.empty() && env.mirror.back() == '/') env.mirror.pop_back();
  } else {
    env.mirror = default_mirror();
  }
  env.fetch.home = env.home;
  return env;
}

std::string Environment::default_mirror() {
  return "file://" + fs::absolute(IRDS_DEFAULT_MIRROR).lexically_normal().string();
}

bool is_valid_dataset_id(std::string_view id) {
  static const std::regex re("^[a-z0-9][a-z0-9._-]*(/[a-z0-9][a-z0-9._-]*)*$");
  return std::regex_match(id.begin(), id.end(), re);
}

DatasetHandle::DatasetHandle(std::string id, DatasetMetadata metadata,
                             std::map<EntityType, EntityProvider> providers,
                             DocstoreFactory docstore_factory)
    : id_(std::move(id)),
      metadata_(std::move(metadata)),
      providers_(std::move(providers)),
      docstore_factory_(std::move(docstore_factory)) {
  if (providers_.empty()) {
    throw Error(ErrorKind::registry_error, "dataset '" + id_ + "' provides no entities");
  }
  metadata_.downloadable = true;
  for (const auto& spec : downloads()) {
    if (!spec.url) metadata_.downloadable = false;
  }
}

std::set<EntityType> DatasetHandle::capabilities() const {
  std::set<EntityType> out;
  for (const auto& [type, p] : providers_) out.insert(type);
  return out;
}

const EntityProvider& DatasetHandle::provider(EntityType type) const {
  auto it = providers_.find(type);
  if (it == providers_.end()) {
    throw Error(ErrorKind::unsupported_entity, "dataset '" + id_ + "' does not provide " +
                                                   std::string(to_string(type)));
  }
  return it->second;
}

std::shared_ptr<const Docstore> DatasetHandle::docs_store() const {
  provider(EntityType::docs);
  if (!docstore_factory_) {
    throw Error(ErrorKind::unsupported_entity, "dataset '" + id_ + "' has no docstore");
  }
  return docstore_factory_();
}

DocsView DatasetHandle::docs_view() const { return DocsView(docstore_source(docs_store())); }

std::vector<DownloadSpec> DatasetHandle::downloads() const {
  std::map<std::string, DownloadSpec> by_dest;
  for (const auto& [type, p] : providers_) {
    for (const auto& s : p.sources) by_dest.emplace(s.dest.generic_string(), s);
  }
  std::vector<DownloadSpec> out;
  for (auto& [dest, s] : by_dest) out.push_back(std::move(s));
  return out;
}

std::string capabilities_csv(const std::set<EntityType>& caps) {
  std::string out;
  for (auto t : caps) {
    if (!out.empty()) out += ',';
    out += to_string(t);
  }
  return out;
}

Registry::Registry(Environment env) : env_(std::move(env)) {}

Registry Registry::builtin(Environment env) {
  Registry reg(std::move(env));
  for (auto& def : builtin_defs()) {
    auto id = def.id;
    reg.add(std::move(id), [def = std::move(def)](const Environment& e) {
      return make_builtin(def, e);
    });
  }
  return reg;
}

void Registry::add(std::string id, Factory factory) {
  if (!is_valid_dataset_id(id)) {
    throw Error(ErrorKind::registry_error, "invalid dataset id '" + id + "'");
  }
  if (factories_.count(id)) {
    throw Error(ErrorKind::registry_error, "dataset '" + id + "' is already registered");
  }
  factories_.emplace(std::move(id), std::move(factory));
}

void Registry::register_dataset(std::string id, DatasetHandle handle) {
  handle.id_ = id;
  add(std::move(id), [handle = std::move(handle)](const Environment&) { return handle; });
}

DatasetHandle Registry::load(std::string_view id) const {
  auto it = factories_.find(id);
  if (it == factories_.end()) throw UnknownDataset(std::string(id), suggestions(id));
  auto handle = it->second(env_);

  std::optional<DatasetHandle> parent;
  for (const auto& anc : ancestors(id)) {
    if (!contains(anc)) continue;
    auto candidate = load(anc);
    if (candidate.has(EntityType::docs)) {
      parent = std::move(candidate);
      break;
    }
  }
  if (parent) {
    if (handle.has(EntityType::docs)) {
      throw Error(ErrorKind::registry_error, "dataset '" + std::string(id) +
                                                 "' defines docs but its ancestor '" +
                                                 parent->id() + "' already provides them");
    }
    handle.providers_.emplace(EntityType::docs, parent->provider(EntityType::docs));
    handle.docstore_factory_ = parent->docstore_factory_;
    for (const auto& spec : parent->provider(EntityType::docs).sources) {
      if (!spec.url) handle.metadata_.downloadable = false;
    }
  }
  return handle;
}

std::vector<DatasetInfo> Registry::list_datasets() const {
  std::vector<DatasetInfo> out;
  for (const auto& [id, factory] : factories_) {
    auto h = load(id);
    out.push_back({id, h.capabilities(), h.metadata().downloadable});
  }
  return out;
}

std::vector<std::string> Registry::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, factory] : factories_) out.push_back(id);
  return out;
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::vector<std::string> Registry::suggestions(std::string_view id) const {
  std::vector<std::pair<std::size_t, std::string>> scored;
  for (const auto& [known, factory] : factories_) {
    const auto d = edit_distance(id, known);
    if (d <= 2) scored.emplace_back(d, known);
  }
  std::sort(scored.begin(), scored.end());
  std::vector<std::string> out;
  for (auto& [d, s] : scored) out.push_back(std::move(s));
  return out;
}

DatasetHandle create_dataset(const Environment& env, const std::optional<fs::path>& docs_tsv,
                             const std::optional<fs::path>& queries_tsv,
                             const std::optional<fs::path>& qrels_trec, std::string id) {
  if (!docs_tsv && !queries_tsv && !qrels_trec) {
    throw Error(ErrorKind::registry_error, "create_dataset needs at least one file");
  }
  for (const auto* p : {&docs_tsv, &queries_tsv, &qrels_trec}) {
    if (*p && !fs::exists(**p)) {
      throw Error(ErrorKind::file_missing, "file not found: " + (*p)->string());
    }
  }
  auto local_spec = [](const fs::path& p) {
    DownloadSpec s;
    s.dest = p.relative_path();
    s.manual_instructions = "local file " + fs::absolute(p).string();
    return s;
  };

  std::map<EntityType, EntityProvider> providers;
  DocstoreFactory store;
  if (docs_tsv) {
    const auto path = fs::absolute(*docs_tsv);
    EntityProvider p{Schema::generic_docs(), std::nullopt, [path] {
                       ParseOptions o;
                       o.source_name = path.string();
                       return parse_tsv(open_input(path), Schema::generic_docs(), o);
                     },
                     {local_spec(path)}};
    const auto dir = env.home / "_custom" / sha256_hex(path.string()).substr(0, 16);
    store = [dir, path, open = p.open_iter] {
      // Rebuild when the source file changed since the store was written.
      const auto stamp_path = dir / "source.stamp";
      const auto stamp = file_stamp(path);
      std::error_code ec;
      if (!fs::exists(stamp_path) || read_file(stamp_path) != stamp) {
        fs::remove_all(dir / "docs.irds", ec);
        fs::create_directories(dir);
        write_file_atomic(stamp_path, stamp);
      }
      DocstoreBuildOptions opts;
      opts.schema = Schema::generic_docs();
      return std::shared_ptr<const Docstore>(Docstore::open_or_build(dir / "docs.irds", open, opts));
    };
    providers.emplace(EntityType::docs, std::move(p));
  }
  if (queries_tsv) {
    const auto path = fs::absolute(*queries_tsv);
    providers.emplace(EntityType::queries,
                      EntityProvider{Schema::generic_queries(), std::nullopt, [path] {
                                       ParseOptions o;
                                       o.source_name = path.string();
                                       return parse_tsv(open_input(path), Schema::generic_queries(), o);
                                     },
                                     {local_spec(path)}});
  }
  if (qrels_trec) {
    const auto path = fs::absolute(*qrels_trec);
    providers.emplace(EntityType::qrels,
                      EntityProvider{Schema::trec_qrels(), std::nullopt, [path] {
                                       ParseOptions o;
                                       o.source_name = path.string();
                                       return parse_trec_qrels(open_input(path), o);
                                     },
                                     {local_spec(path)}});
  }
  DatasetMetadata meta{"Custom dataset built from local files.", std::nullopt, "", false};
  return DatasetHandle(std::move(id), std::move(meta), std::move(providers), std::move(store));
}

}  // namespace irds
