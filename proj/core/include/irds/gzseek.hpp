#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

namespace irds {

inline constexpr std::size_t gzip_window_size = 32768;
inline constexpr std::uint64_t default_checkpoint_interval = 8ull << 20;
inline constexpr std::uint64_t min_checkpoint_interval = 64ull << 10;

/// Resumable deflate position: a block boundary plus the 32 KiB of output
/// preceding it.
struct Checkpoint {
  /// Byte holding the bit position; when comp_bit > 0 the decoder resumes at
  /// comp_byte - 1 with comp_bit bits of that byte still unread.
  std::uint64_t comp_byte = 0;
  std::uint8_t comp_bit = 0;
  std::uint64_t uncomp_offset = 0;
  std::vector<unsigned char> window;
};

/// Checkpoint file layout (".chk"): "IRGZ1", u8 version=1, 32-byte sha256 of
/// the gzip file, u64 interval, u64 count, u64 total_uncompressed, then per
/// checkpoint: u64 comp_byte, u8 comp_bit, u64 uncomp_offset, u32 length +
/// zlib-compressed window. Integers little endian.
struct CheckpointIndex {
  std::string source_sha256;
  std::uint64_t interval = default_checkpoint_interval;
  std::uint64_t total_uncompressed = 0;
  std::vector<Checkpoint> checkpoints;

  std::string serialize() const;
  static CheckpointIndex deserialize(std::string_view bytes);
  void save(const std::filesystem::path& path) const;
  static CheckpointIndex load(const std::filesystem::path& path);
};

/// "<source>.chk".
std::filesystem::path checkpoint_path(const std::filesystem::path& gz_path);

/// One full decompression pass recording a checkpoint at the first deflate
/// block boundary at or after every multiple of `interval`. Throws
/// CorruptGzip on malformed input.
CheckpointIndex build_checkpoints(const std::filesystem::path& gz_path,
                                  std::uint64_t interval = default_checkpoint_interval);

/// Uses "<source>.chk" when it exists and matches the source hash; otherwise
/// builds and writes it.
CheckpointIndex load_or_build_checkpoints(const std::filesystem::path& gz_path,
                                          std::uint64_t interval = default_checkpoint_interval);

/// Random-access reader over one gzip file.
class SeekableGzip {
 public:
  /// With `verify_source`, the file's sha256 must match the index
  /// (Error(index_mismatch) otherwise).
  SeekableGzip(std::filesystem::path gz_path, std::shared_ptr<const CheckpointIndex> index,
               bool verify_source = true);

  /// Exactly `length` bytes of the decompressed stream starting at `offset`.
  /// Throws Error(out_of_range) past the end.
  std::string read_at(std::uint64_t offset, std::uint64_t length) const;

  /// Compressed bytes read from the file by read_at() calls so far.
  std::uint64_t compressed_bytes_read() const noexcept { return bytes_read_.load(); }
  const CheckpointIndex& index() const noexcept { return *index_; }

 private:
  std::filesystem::path path_;
  std::shared_ptr<const CheckpointIndex> index_;
  mutable std::atomic<std::uint64_t> bytes_read_{0};
};

std::string read_at(const std::filesystem::path& gz_path, const CheckpointIndex& index,
                    std::uint64_t offset, std::uint64_t length);

/// Slices of registered gzip sources, persisted on disk after the first
/// fetch. Cache files live at `<cache_dir>/<source_id>/<offset>-<length>`.
class GzipSliceCache {
 public:
  explicit GzipSliceCache(std::filesystem::path cache_dir);

  void add_source(const std::string& source_id, std::filesystem::path gz_path,
                  std::shared_ptr<const CheckpointIndex> index);

  std::string cached_fetch(const std::string& source_id, std::uint64_t offset,
                           std::uint64_t length);

  /// Compressed bytes read from all sources by cache misses.
  std::uint64_t source_bytes_read() const;
  std::uint64_t hits() const noexcept { return hits_.load(); }
  std::uint64_t misses() const noexcept { return misses_.load(); }
  void clear();

 private:
  std::filesystem::path slice_path(const std::string& source_id, std::uint64_t offset,
                                   std::uint64_t length) const;

  std::filesystem::path dir_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<SeekableGzip>> sources_;
  std::atomic<std::uint64_t> hits_{0};
  std::atomic<std::uint64_t> misses_{0};
};

}  // namespace irds
