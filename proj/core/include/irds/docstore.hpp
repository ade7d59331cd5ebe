#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "irds/lru_cache.hpp"
#include "irds/record.hpp"
#include "irds/stream.hpp"

namespace irds {

/// Paths of the three files that make up a store.
///
/// meta:  "IRDS1", u8 version=1, u64 count, u16 max_id_len,
///        u32 descriptor length + schema descriptor JSON, u8 complete flag.
/// index: count x (max_id_len bytes NUL-padded id, u64 LE offset, u32 LE length),
///        sorted by id bytes.
/// data:  one lz4 frame per record, in build order. Inside a frame every field
///        is a u32 LE length followed by its UTF-8 text.
struct DocstoreFiles {
  std::filesystem::path data;
  std::filesystem::path index;
  std::filesystem::path meta;

  static DocstoreFiles in(const std::filesystem::path& dir);
};

struct DocstoreBuildOptions {
  /// Above this many bytes of buffered index entries, sorted runs spill to disk.
  std::uint64_t memory_budget = 256ull << 20;
  /// Keep the first occurrence of a duplicate id instead of failing.
  bool keep_first = false;
  /// lz4 compression level; >= 3 selects the high-compression encoder.
  int compression_level = 9;
  /// Schema recorded when `docs` yields nothing; otherwise taken from the
  /// first record.
  SchemaPtr schema;
};

struct DocstoreBuildStats {
  std::uint64_t records = 0;
  std::uint64_t dropped_duplicates = 0;
  /// Sum of serialized (uncompressed) record sizes.
  std::uint64_t raw_bytes = 0;
  std::uint64_t data_bytes = 0;
  std::uint64_t spilled_runs = 0;
};

struct DocstoreOptions {
  std::size_t cache_capacity = 4096;
};

struct DocstoreCounters {
  std::uint64_t probes = 0;
  std::uint64_t decodes = 0;
  std::uint64_t cache_hits = 0;
};

/// Serialized form of a record inside a frame.
std::string encode_record(const Record& record);
Record decode_record(std::string_view bytes, const SchemaPtr& schema);

/// Writes a complete store into `dir`. The meta file's complete flag is the
/// last byte written; an interrupted build leaves it unset.
DocstoreBuildStats build_docstore(RecordStream docs, const std::filesystem::path& dir,
                                  const DocstoreBuildOptions& options = {});

/// Read-only, ID-addressable view of a built store. Safe for concurrent use.
class Docstore {
 public:
  static std::shared_ptr<Docstore> build(RecordStream docs, const std::filesystem::path& dir,
                                         const DocstoreBuildOptions& build_options = {},
                                         const DocstoreOptions& options = {});

  /// Throws Error(storage_error) if the store is missing or incomplete.
  static std::shared_ptr<Docstore> open(const std::filesystem::path& dir,
                                        const DocstoreOptions& options = {});

  static bool is_complete(const std::filesystem::path& dir);

  /// Opens the store, (re)building it under a lock file when absent or
  /// incomplete.
  static std::shared_ptr<Docstore> open_or_build(const std::filesystem::path& dir,
                                                 const std::function<RecordStream()>& docs,
                                                 const DocstoreBuildOptions& build_options = {},
                                                 const DocstoreOptions& options = {});

  ~Docstore();
  Docstore(const Docstore&) = delete;
  Docstore& operator=(const Docstore&) = delete;

  /// Throws DocNotFound.
  Record get(std::string_view id) const;
  std::optional<Record> find(std::string_view id) const;
  std::unordered_map<std::string, Record> get_many(std::span<const std::string> ids) const;
  /// Found records, each once, in ascending data-file offset order.
  RecordStream get_many_iter(std::span<const std::string> ids) const;

  std::uint64_t count() const noexcept { return count_; }
  const SchemaPtr& schema() const noexcept { return schema_; }
  std::size_t max_id_length() const noexcept { return max_id_len_; }

  /// Record at a position of the data file order (0-based).
  Record read_position(std::uint64_t position) const;
  /// Data-file-ordered scan of every record.
  RecordStream scan() const;

  DocstoreCounters counters() const;
  void reset_counters() const;
  void clear_cache() const { cache_.clear(); }

  struct Entry {
    std::uint64_t offset;
    std::uint32_t length;
  };

 private:
  Docstore() = default;

  std::optional<Entry> lookup(std::string_view id) const;
  Record decode_at(const Entry& entry) const;
  const std::vector<Entry>& positions() const;

  SchemaPtr schema_;
  std::uint64_t count_ = 0;
  std::size_t max_id_len_ = 0;
  std::size_t entry_width_ = 0;

  int data_fd_ = -1;
  const unsigned char* index_ = nullptr;
  std::size_t index_size_ = 0;

  mutable LruCache<std::string, Record> cache_;
  mutable std::once_flag positions_once_;
  mutable std::vector<Entry> positions_;

  mutable std::atomic<std::uint64_t> probes_{0};
  mutable std::atomic<std::uint64_t> decodes_{0};
  mutable std::atomic<std::uint64_t> cache_hits_{0};
};

}  // namespace irds
