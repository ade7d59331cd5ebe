#pragma once

#include <chrono>
#include <filesystem>

namespace irds {

/// Cross-process exclusive lock represented by the existence of a file.
///
/// acquire() polls until the lock file can be created exclusively. A lock file
/// whose mtime is older than `stale_after` is assumed abandoned and taken over.
class LockFile {
 public:
  static constexpr std::chrono::minutes default_stale_after{15};

  static LockFile acquire(std::filesystem::path path,
                          std::chrono::seconds stale_after = default_stale_after,
                          std::chrono::milliseconds poll = std::chrono::milliseconds(50));

  /// Single attempt; empty lock if held elsewhere and not stale.
  static LockFile try_acquire(std::filesystem::path path,
                              std::chrono::seconds stale_after = default_stale_after);

  LockFile() = default;
  LockFile(LockFile&& other) noexcept : path_(std::move(other.path_)) { other.path_.clear(); }
  LockFile& operator=(LockFile&& other) noexcept;
  LockFile(const LockFile&) = delete;
  LockFile& operator=(const LockFile&) = delete;
  ~LockFile() { release(); }

  bool held() const noexcept { return !path_.empty(); }
  void release() noexcept;

 private:
  explicit LockFile(std::filesystem::path path) : path_(std::move(path)) {}

  std::filesystem::path path_;
};

}  // namespace irds
