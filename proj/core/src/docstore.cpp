#include "irds/docstore.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <queue>

#include <fcntl.h>
#include <lz4frame.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include "irds/endian.hpp"
#include "irds/errors.hpp"
#include "irds/io.hpp"
#include "irds/lockfile.hpp"

namespace irds {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view meta_magic = "IRDS1";
constexpr std::uint8_t format_version = 1;

[[noreturn]] void storage_error(const std::string& what) {
  throw Error(ErrorKind::storage_error, what);
}

struct LZ4Compressor {
  LZ4Compressor(int level) {
    if (LZ4F_isError(LZ4F_createCompressionContext(&ctx, LZ4F_VERSION))) {
      storage_error("cannot create lz4 context");
    }
    prefs.compressionLevel = level;
    prefs.frameInfo.blockMode = LZ4F_blockIndependent;
    prefs.frameInfo.contentChecksumFlag = LZ4F_noContentChecksum;
  }
  ~LZ4Compressor() { LZ4F_freeCompressionContext(ctx); }

  // Compresses `src` into one frame stored in `out`.
  void compress(std::string_view src, std::string& out) {
    prefs.frameInfo.contentSize = src.size();
    const std::size_t bound = LZ4F_HEADER_SIZE_MAX + LZ4F_compressBound(src.size(), &prefs);
    out.resize(bound);
    auto* dst = reinterpret_cast<unsigned char*>(out.data());
    std::size_t pos = check(LZ4F_compressBegin(ctx, dst, bound, &prefs));
    pos += check(LZ4F_compressUpdate(ctx, dst + pos, bound - pos, src.data(), src.size(), nullptr));
    pos += check(LZ4F_compressEnd(ctx, dst + pos, bound - pos, nullptr));
    out.resize(pos);
  }

  static std::size_t check(std::size_t code) {
    if (LZ4F_isError(code)) storage_error(std::string("lz4: ") + LZ4F_getErrorName(code));
    return code;
  }

  LZ4F_cctx* ctx = nullptr;
  LZ4F_preferences_t prefs{};
};

std::string lz4_decompress(std::string_view frame) {
  struct Ctx {
    Ctx() { LZ4F_createDecompressionContext(&dctx, LZ4F_VERSION); }
    ~Ctx() { LZ4F_freeDecompressionContext(dctx); }
    LZ4F_dctx* dctx = nullptr;
  };
  thread_local Ctx ctx;
  LZ4F_resetDecompressionContext(ctx.dctx);

  LZ4F_frameInfo_t info{};
  std::size_t consumed = frame.size();
  auto code = LZ4F_getFrameInfo(ctx.dctx, &info, frame.data(), &consumed);
  if (LZ4F_isError(code)) storage_error(std::string("lz4 header: ") + LZ4F_getErrorName(code));
  std::string out(info.contentSize > 0 ? info.contentSize : frame.size() * 4, '\0');
  std::size_t written = 0;
  std::size_t in_pos = consumed;
  while (true) {
    std::size_t dst_size = out.size() - written;
    std::size_t src_size = frame.size() - in_pos;
    code = LZ4F_decompress(ctx.dctx, out.data() + written, &dst_size, frame.data() + in_pos,
                           &src_size, nullptr);
    if (LZ4F_isError(code)) storage_error(std::string("lz4: ") + LZ4F_getErrorName(code));
    written += dst_size;
    in_pos += src_size;
    if (code == 0) break;
    if (in_pos >= frame.size() && dst_size == 0) storage_error("truncated lz4 frame");
    if (written == out.size()) out.resize(out.size() * 2);
  }
  out.resize(written);
  return out;
}

struct SortEntry {
  std::string id;
  std::uint64_t offset;
  std::uint32_t length;

  friend bool operator<(const SortEntry& a, const SortEntry& b) {
    return a.id != b.id ? a.id < b.id : a.offset < b.offset;
  }
};

// External sort of (id, offset, length) triples. Buffers up to a memory
// budget, then spills sorted runs and k-way merges them.
class EntrySorter {
 public:
  EntrySorter(fs::path dir, std::uint64_t budget) : dir_(std::move(dir)), budget_(budget) {}

  ~EntrySorter() {
    for (const auto& run : runs_) {
      std::error_code ec;
      fs::remove(run, ec);
    }
  }

  void add(std::string id, std::uint64_t offset, std::uint32_t length) {
    buffered_bytes_ += id.size() + sizeof(SortEntry) + 16;
    buffer_.push_back({std::move(id), offset, length});
    if (buffered_bytes_ > budget_) spill();
  }

  std::size_t runs() const { return runs_.size(); }

  template <typename Sink>
  void drain(Sink&& sink) {
    if (runs_.empty()) {
      std::sort(buffer_.begin(), buffer_.end());
      for (const auto& e : buffer_) sink(e);
      buffer_.clear();
      return;
    }
    if (!buffer_.empty()) spill();
    merge(sink);
  }

 private:
  void spill() {
    std::sort(buffer_.begin(), buffer_.end());
    auto path = dir_ / ("sort-run-" + std::to_string(runs_.size()) + ".tmp");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    std::string rec;
    for (const auto& e : buffer_) {
      rec.clear();
      put_le<std::uint16_t>(rec, static_cast<std::uint16_t>(e.id.size()));
      rec += e.id;
      put_le<std::uint64_t>(rec, e.offset);
      put_le<std::uint32_t>(rec, e.length);
      out.write(rec.data(), static_cast<std::streamsize>(rec.size()));
    }
    if (!out) storage_error("cannot write sort run " + path.string());
    runs_.push_back(std::move(path));
    buffer_.clear();
    buffer_.shrink_to_fit();
    buffered_bytes_ = 0;
  }

  struct RunReader {
    std::unique_ptr<std::ifstream> in;
    SortEntry current;

    bool advance() {
      unsigned char len_buf[2];
      if (!in->read(reinterpret_cast<char*>(len_buf), 2)) return false;
      const auto len = get_le<std::uint16_t>(len_buf);
      current.id.resize(len);
      unsigned char tail[12];
      if (!in->read(current.id.data(), len) || !in->read(reinterpret_cast<char*>(tail), 12)) {
        storage_error("truncated sort run");
      }
      current.offset = get_le<std::uint64_t>(tail);
      current.length = get_le<std::uint32_t>(tail + 8);
      return true;
    }
  };

  template <typename Sink>
  void merge(Sink& sink) {
    std::vector<RunReader> readers;
    readers.reserve(runs_.size());
    for (const auto& run : runs_) {
      RunReader r{std::make_unique<std::ifstream>(run, std::ios::binary), {}};
      if (r.advance()) readers.push_back(std::move(r));
    }
    auto greater = [&](std::size_t a, std::size_t b) {
      return readers[b].current < readers[a].current;
    };
    std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(greater)> heap(greater);
    for (std::size_t i = 0; i < readers.size(); ++i) heap.push(i);
    while (!heap.empty()) {
      const auto i = heap.top();
      heap.pop();
      sink(readers[i].current);
      if (readers[i].advance()) heap.push(i);
    }
  }

  fs::path dir_;
  std::uint64_t budget_;
  std::uint64_t buffered_bytes_ = 0;
  std::vector<SortEntry> buffer_;
  std::vector<fs::path> runs_;
};

void fsync_path(const fs::path& path) {
  const int fd = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

struct Meta {
  std::uint64_t count = 0;
  std::uint16_t max_id_len = 0;
  std::string descriptor;
  bool complete = false;
};

std::optional<Meta> read_meta(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::size_t fixed = meta_magic.size() + 1 + 8 + 2 + 4;
  if (bytes.size() < fixed + 1 || std::string_view(bytes).substr(0, 5) != meta_magic) {
    return std::nullopt;
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (p[5] != format_version) return std::nullopt;
  Meta meta;
  meta.count = get_le<std::uint64_t>(p + 6);
  meta.max_id_len = get_le<std::uint16_t>(p + 14);
  const auto desc_len = get_le<std::uint32_t>(p + 16);
  if (bytes.size() != fixed + desc_len + 1) return std::nullopt;
  meta.descriptor = bytes.substr(fixed, desc_len);
  meta.complete = p[fixed + desc_len] == 1;
  return meta;
}

}  // namespace

DocstoreFiles DocstoreFiles::in(const fs::path& dir) {
  return {dir / "docs.data", dir / "docs.index", dir / "docs.meta"};
}

std::string encode_record(const Record& record) {
  std::string out;
  for (const auto& value : record.values()) {
    const auto text = value_text(value);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
    out += text;
  }
  return out;
}

Record decode_record(std::string_view bytes, const SchemaPtr& schema) {
  std::vector<Value> values;
  values.reserve(schema->size());
  std::size_t pos = 0;
  for (const auto& spec : schema->fields()) {
    if (pos + 4 > bytes.size()) storage_error("truncated record");
    const auto len = get_le<std::uint32_t>(reinterpret_cast<const unsigned char*>(bytes.data()) + pos);
    pos += 4;
    if (pos + len > bytes.size()) storage_error("truncated record field " + spec.name);
    auto value = coerce(bytes.substr(pos, len), spec.kind);
    if (!value) storage_error("undecodable field " + spec.name);
    values.push_back(std::move(*value));
    pos += len;
  }
  if (pos != bytes.size()) storage_error("trailing bytes in record");
  return Record(schema, std::move(values));
}

DocstoreBuildStats build_docstore(RecordStream docs, const fs::path& dir,
                                  const DocstoreBuildOptions& options) {
  fs::create_directories(dir);
  const auto files = DocstoreFiles::in(dir);
  std::error_code ec;
  fs::remove(files.meta, ec);

  DocstoreBuildStats stats;
  EntrySorter sorter(dir, options.memory_budget);
  LZ4Compressor compressor(options.compression_level);
  SchemaPtr schema = options.schema;
  std::size_t max_id = 0;
  std::uint64_t offset = 0;

  {
    std::ofstream data(files.data, std::ios::binary | std::ios::trunc);
    if (!data) storage_error("cannot create " + files.data.string());
    std::string frame;
    while (auto record = docs.next()) {
      if (!schema) schema = record->schema_ptr();
      if (!(record->schema() == *schema)) storage_error("records with differing schemas");
      validate(*record);
      const auto& id = record->id();
      if (id.empty()) throw SchemaViolation(schema->field(0).name, "empty document id");
      if (id.find('\0') != std::string::npos) {
        throw SchemaViolation(schema->field(0).name, "document id contains NUL");
      }
      if (id.size() > 0xFFFF) throw SchemaViolation(schema->field(0).name, "document id too long");
      const auto raw = encode_record(*record);
      stats.raw_bytes += raw.size();
      compressor.compress(raw, frame);
      data.write(frame.data(), static_cast<std::streamsize>(frame.size()));
      sorter.add(id, offset, static_cast<std::uint32_t>(frame.size()));
      offset += frame.size();
      max_id = std::max(max_id, id.size());
    }
    data.flush();
    if (!data) storage_error("write failed on " + files.data.string());
  }
  if (!schema) schema = Schema::generic_docs();
  stats.data_bytes = offset;
  stats.spilled_runs = sorter.runs();

  {
    std::ofstream index(files.index, std::ios::binary | std::ios::trunc);
    if (!index) storage_error("cannot create " + files.index.string());
    std::string entry(max_id + 12, '\0');
    std::string prev;
    bool first = true;
    sorter.drain([&](const SortEntry& e) {
      if (!first && e.id == prev) {
        if (!options.keep_first) throw DuplicateDocId(e.id);
        ++stats.dropped_duplicates;
        return;
      }
      first = false;
      prev = e.id;
      std::fill(entry.begin(), entry.end(), '\0');
      std::memcpy(entry.data(), e.id.data(), e.id.size());
      auto* tail = reinterpret_cast<unsigned char*>(entry.data() + max_id);
      set_le<std::uint64_t>(tail, e.offset);
      set_le<std::uint32_t>(tail + 8, e.length);
      index.write(entry.data(), static_cast<std::streamsize>(entry.size()));
      ++stats.records;
    });
    index.flush();
    if (!index) storage_error("write failed on " + files.index.string());
  }
  stats.spilled_runs = std::max<std::uint64_t>(stats.spilled_runs, sorter.runs());
  fsync_path(files.data);
  fsync_path(files.index);

  const auto descriptor = schema->descriptor();
  std::string meta(meta_magic);
  meta.push_back(static_cast<char>(format_version));
  put_le<std::uint64_t>(meta, stats.records);
  put_le<std::uint16_t>(meta, static_cast<std::uint16_t>(max_id));
  put_le<std::uint32_t>(meta, static_cast<std::uint32_t>(descriptor.size()));
  meta += descriptor;
  meta.push_back('\0');
  {
    std::ofstream out(files.meta, std::ios::binary | std::ios::trunc);
    out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
    out.flush();
    if (!out) storage_error("cannot write " + files.meta.string());
  }
  fsync_path(files.meta);
  // The complete flag goes last, after everything it vouches for is durable.
  const int fd = ::open(files.meta.c_str(), O_WRONLY | O_CLOEXEC);
  if (fd < 0) storage_error("cannot reopen " + files.meta.string());
  const char one = 1;
  const bool ok = ::pwrite(fd, &one, 1, static_cast<off_t>(meta.size() - 1)) == 1 && ::fsync(fd) == 0;
  ::close(fd);
  if (!ok) storage_error("cannot finalize " + files.meta.string());
  return stats;
}

std::shared_ptr<Docstore> Docstore::build(RecordStream docs, const fs::path& dir,
                                          const DocstoreBuildOptions& build_options,
                                          const DocstoreOptions& options) {
  build_docstore(std::move(docs), dir, build_options);
  return open(dir, options);
}

bool Docstore::is_complete(const fs::path& dir) {
  auto meta = read_meta(DocstoreFiles::in(dir).meta);
  return meta && meta->complete;
}

std::shared_ptr<Docstore> Docstore::open(const fs::path& dir, const DocstoreOptions& options) {
  const auto files = DocstoreFiles::in(dir);
  auto meta = read_meta(files.meta);
  if (!meta) storage_error("no docstore at " + dir.string());
  if (!meta->complete) storage_error("docstore at " + dir.string() + " is incomplete");

  std::shared_ptr<Docstore> store(new Docstore());
  store->schema_ = Schema::from_descriptor(meta->descriptor);
  store->count_ = meta->count;
  store->max_id_len_ = meta->max_id_len;
  store->entry_width_ = meta->max_id_len + 12;
  store->cache_.set_capacity(options.cache_capacity);

  const int index_fd = ::open(files.index.c_str(), O_RDONLY | O_CLOEXEC);
  if (index_fd < 0) storage_error("cannot open " + files.index.string());
  struct stat st {};
  ::fstat(index_fd, &st);
  store->index_size_ = static_cast<std::size_t>(st.st_size);
  if (store->index_size_ != store->count_ * store->entry_width_) {
    ::close(index_fd);
    storage_error("index size does not match metadata in " + dir.string());
  }
  if (store->index_size_ > 0) {
    void* p = ::mmap(nullptr, store->index_size_, PROT_READ, MAP_SHARED, index_fd, 0);
    if (p == MAP_FAILED) {
      ::close(index_fd);
      storage_error("cannot map " + files.index.string());
    }
    store->index_ = static_cast<const unsigned char*>(p);
  }
  ::close(index_fd);

  store->data_fd_ = ::open(files.data.c_str(), O_RDONLY | O_CLOEXEC);
  if (store->data_fd_ < 0) storage_error("cannot open " + files.data.string());
  return store;
}

std::shared_ptr<Docstore> Docstore::open_or_build(const fs::path& dir,
                                                  const std::function<RecordStream()>& docs,
                                                  const DocstoreBuildOptions& build_options,
                                                  const DocstoreOptions& options) {
  if (is_complete(dir)) return open(dir, options);
  fs::create_directories(dir);
  auto lock = LockFile::acquire(dir / "build.lock");
  if (!is_complete(dir)) build_docstore(docs(), dir, build_options);
  return open(dir, options);
}

Docstore::~Docstore() {
  if (index_) ::munmap(const_cast<unsigned char*>(index_), index_size_);
  if (data_fd_ >= 0) ::close(data_fd_);
}

std::optional<Docstore::Entry> Docstore::lookup(std::string_view id) const {
  if (id.empty() || id.size() > max_id_len_) return std::nullopt;
  std::uint64_t lo = 0;
  std::uint64_t hi = count_;
  while (lo < hi) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    probes_.fetch_add(1, std::memory_order_relaxed);
    const unsigned char* e = index_ + mid * entry_width_;
    int c = std::memcmp(e, id.data(), id.size());
    if (c == 0 && id.size() < max_id_len_ && e[id.size()] != 0) c = 1;
    if (c == 0) {
      return Entry{get_le<std::uint64_t>(e + max_id_len_), get_le<std::uint32_t>(e + max_id_len_ + 8)};
    }
    if (c < 0) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  return std::nullopt;
}

Record Docstore::decode_at(const Entry& entry) const {
  std::string frame(entry.length, '\0');
  std::size_t done = 0;
  while (done < frame.size()) {
    const auto n = ::pread(data_fd_, frame.data() + done, frame.size() - done,
                           static_cast<off_t>(entry.offset + done));
    if (n <= 0) storage_error("short read from docstore data file");
    done += static_cast<std::size_t>(n);
  }
  decodes_.fetch_add(1, std::memory_order_relaxed);
  return decode_record(lz4_decompress(frame), schema_);
}

std::optional<Record> Docstore::find(std::string_view id) const {
  std::string key(id);
  if (auto hit = cache_.get(key)) {
    cache_hits_.fetch_add(1, std::memory_order_relaxed);
    return hit;
  }
  auto entry = lookup(id);
  if (!entry) return std::nullopt;
  auto record = decode_at(*entry);
  cache_.put(key, record);
  return record;
}

Record Docstore::get(std::string_view id) const {
  auto record = find(id);
  if (!record) throw DocNotFound(std::string(id));
  return std::move(*record);
}

std::unordered_map<std::string, Record> Docstore::get_many(std::span<const std::string> ids) const {
  std::unordered_map<std::string, Record> out;
  for (const auto& id : ids) {
    if (out.contains(id)) continue;
    if (auto r = find(id)) out.emplace(id, std::move(*r));
  }
  return out;
}

namespace {

class EntryListReader : public RecordReader {
 public:
  using Decode = std::function<Record(const Docstore::Entry&)>;

  EntryListReader(std::vector<Docstore::Entry> entries, Decode decode)
      : entries_(std::move(entries)), decode_(std::move(decode)) {}

  std::optional<Record> next() override {
    if (pos_ >= entries_.size()) return std::nullopt;
    return decode_(entries_[pos_++]);
  }

 private:
  std::vector<Docstore::Entry> entries_;
  Decode decode_;
  std::size_t pos_ = 0;
};

}  // namespace

RecordStream Docstore::get_many_iter(std::span<const std::string> ids) const {
  std::vector<Entry> entries;
  entries.reserve(ids.size());
  for (const auto& id : ids) {
    if (auto e = lookup(id)) entries.push_back(*e);
  }
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.offset < b.offset; });
  entries.erase(std::unique(entries.begin(), entries.end(),
                            [](const Entry& a, const Entry& b) { return a.offset == b.offset; }),
                entries.end());
  return RecordStream(std::make_unique<EntryListReader>(
      std::move(entries), [this](const Entry& e) { return decode_at(e); }));
}

const std::vector<Docstore::Entry>& Docstore::positions() const {
  std::call_once(positions_once_, [this] {
    positions_.reserve(count_);
    for (std::uint64_t i = 0; i < count_; ++i) {
      const unsigned char* e = index_ + i * entry_width_;
      positions_.push_back(
          {get_le<std::uint64_t>(e + max_id_len_), get_le<std::uint32_t>(e + max_id_len_ + 8)});
    }
    std::sort(positions_.begin(), positions_.end(),
              [](const Entry& a, const Entry& b) { return a.offset < b.offset; });
  });
  return positions_;
}

Record Docstore::read_position(std::uint64_t position) const {
  const auto& pos = positions();
  if (position >= pos.size()) {
    throw Error(ErrorKind::out_of_range, "position " + std::to_string(position) +
                                             " beyond docstore count " + std::to_string(count_));
  }
  return decode_at(pos[position]);
}

RecordStream Docstore::scan() const {
  return RecordStream(std::make_unique<EntryListReader>(
      positions(), [this](const Entry& e) { return decode_at(e); }));
}

DocstoreCounters Docstore::counters() const {
  return {probes_.load(), decodes_.load(), cache_hits_.load()};
}

void Docstore::reset_counters() const {
  probes_ = 0;
  decodes_ = 0;
  cache_hits_ = 0;
}

}  // namespace irds
