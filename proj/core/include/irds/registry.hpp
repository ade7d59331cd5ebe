#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "irds/fetch.hpp"
#include "irds/formats.hpp"
#include "irds/record.hpp"
#include "irds/slicing.hpp"
#include "irds/stream.hpp"

namespace irds {

class Docstore;

/// Where cached data lives and how sources are fetched.
struct Environment {
  std::filesystem::path home;
  /// Base URL that relative mirror paths of built-in datasets resolve against.
  std::string mirror;
  FetchOptions fetch;

  /// home: `home_override`, else $IRDS_HOME, else ~/.ir_datasets.
  /// mirror: $IRDS_MIRROR, else the bundled fixture mirror.
  static Environment from_env(const std::optional<std::filesystem::path>& home_override = {});
  static std::string default_mirror();
};

bool is_valid_dataset_id(std::string_view id);

struct EntityProvider {
  SchemaPtr schema;
  std::optional<std::uint64_t> count_hint;
  std::function<RecordStream()> open_iter;
  /// Files open_iter reads; verified by `ir_datasets verify`.
  std::vector<DownloadSpec> sources;
};

struct DatasetMetadata {
  std::string description;
  std::optional<std::string> license_note;
  std::string citation;
  /// Derived from the providers' sources: false if any is manual.
  bool downloadable = true;
};

using DocstoreFactory = std::function<std::shared_ptr<const Docstore>()>;

/// Stateless view of one dataset: every call re-opens its sources.
class DatasetHandle {
 public:
  DatasetHandle() = default;
  DatasetHandle(std::string id, DatasetMetadata metadata,
                std::map<EntityType, EntityProvider> providers,
                DocstoreFactory docstore_factory = {});

  const std::string& id() const noexcept { return id_; }
  const DatasetMetadata& metadata() const noexcept { return metadata_; }
  const std::map<EntityType, EntityProvider>& providers() const noexcept { return providers_; }
  std::set<EntityType> capabilities() const;
  bool has(EntityType type) const { return providers_.count(type) > 0; }

  /// Throws Error(unsupported_entity).
  const EntityProvider& provider(EntityType type) const;
  SchemaPtr schema(EntityType type) const { return provider(type).schema; }
  RecordStream iter(EntityType type) const { return provider(type).open_iter(); }

  RecordStream docs_iter() const { return iter(EntityType::docs); }
  RecordStream queries_iter() const { return iter(EntityType::queries); }
  RecordStream qrels_iter() const { return iter(EntityType::qrels); }
  RecordStream scoreddocs_iter() const { return iter(EntityType::scoreddocs); }
  RecordStream docpairs_iter() const { return iter(EntityType::docpairs); }

  bool has_docstore() const noexcept { return static_cast<bool>(docstore_factory_); }
  /// Opens (building on first use) the ID-addressable store over docs.
  std::shared_ptr<const Docstore> docs_store() const;
  /// Positional view over the docstore, for slicing.
  DocsView docs_view() const;

  /// Source files of all providers (including inherited ones), by dest.
  std::vector<DownloadSpec> downloads() const;

 private:
  friend class Registry;

  std::string id_;
  DatasetMetadata metadata_;
  std::map<EntityType, EntityProvider> providers_;
  DocstoreFactory docstore_factory_;
};

struct DatasetInfo {
  std::string id;
  std::set<EntityType> capabilities;
  bool downloadable = true;
};

/// Comma-separated entity names in canonical order ("docs,queries,qrels").
std::string capabilities_csv(const std::set<EntityType>& caps);

class Registry {
 public:
  using Factory = std::function<DatasetHandle(const Environment&)>;

  explicit Registry(Environment env);
  /// Registry holding the shipped datasets.
  static Registry builtin(Environment env);

  /// Throws Error(registry_error) on a malformed or duplicate id.
  void add(std::string id, Factory factory);
  /// Registers an already constructed handle (e.g. from create_dataset).
  void register_dataset(std::string id, DatasetHandle handle);

  /// Lazy: performs no I/O. A dataset without its own docs inherits those of
  /// the nearest registered ancestor that has them. Throws UnknownDataset.
  DatasetHandle load(std::string_view id) const;
  bool contains(std::string_view id) const { return factories_.count(std::string(id)) > 0; }
  std::vector<DatasetInfo> list_datasets() const;
  std::vector<std::string> ids() const;
  /// Registered ids within edit distance 2, closest first.
  std::vector<std::string> suggestions(std::string_view id) const;

  const Environment& environment() const noexcept { return env_; }

 private:
  Environment env_;
  std::map<std::string, Factory, std::less<>> factories_;
};

std::size_t edit_distance(std::string_view a, std::string_view b);

/// Dataset over local files: docs as (doc_id, text) TSV, queries as
/// (query_id, text) TSV, qrels in TREC format. Missing files raise
/// Error(file_missing); parse errors surface during iteration. The docstore
/// is built under `env.home`/_custom.
DatasetHandle create_dataset(const Environment& env,
                             const std::optional<std::filesystem::path>& docs_tsv,
                             const std::optional<std::filesystem::path>& queries_tsv = {},
                             const std::optional<std::filesystem::path>& qrels_trec = {},
                             std::string id = "local/custom");

}  // namespace irds
