#include "irds/lockfile.hpp"

#include <cerrno>
#include <cstring>
#include <string>
#include <thread>

#include <fcntl.h>
#include <unistd.h>

#include "irds/errors.hpp"

namespace irds {

namespace fs = std::filesystem;

namespace {

bool create_exclusive(const fs::path& path) {
  const int fd = ::open(path.c_str(), O_CREAT | O_EXCL | O_WRONLY | O_CLOEXEC, 0644);
  if (fd < 0) {
    if (errno == EEXIST) return false;
    throw Error(ErrorKind::storage_error,
                "cannot create lock file " + path.string() + ": " + std::strerror(errno));
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
  return true;
}

bool is_stale(const fs::path& path, std::chrono::seconds stale_after) {
  std::error_code ec;
  const auto mtime = fs::last_write_time(path, ec);
  if (ec) return false;
  return fs::file_time_type::clock::now() - mtime > stale_after;
}

}  // namespace

LockFile LockFile::try_acquire(fs::path path, std::chrono::seconds stale_after) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  if (create_exclusive(path)) return LockFile(std::move(path));
  if (is_stale(path, stale_after)) {
    // Whoever removes the stale file first wins the subsequent exclusive create.
    std::error_code ec;
    fs::remove(path, ec);
    if (create_exclusive(path)) return LockFile(std::move(path));
  }
  return {};
}

LockFile LockFile::acquire(fs::path path, std::chrono::seconds stale_after,
                           std::chrono::milliseconds poll) {
  while (true) {
    auto lock = try_acquire(path, stale_after);
    if (lock.held()) return lock;
    std::this_thread::sleep_for(poll);
  }
}

LockFile& LockFile::operator=(LockFile&& other) noexcept {
  if (this != &other) {
    release();
    path_ = std::move(other.path_);
    other.path_.clear();
  }
  return *this;
}

void LockFile::release() noexcept {
  if (path_.empty()) return;
  std::error_code ec;
  fs::remove(path_, ec);
  path_.clear();
}

}  // namespace irds
