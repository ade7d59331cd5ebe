#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <memory>
#include <streambuf>
#include <string>
#include <vector>

#include <zlib.h>

namespace irds {

/// Streaming gzip decompression over another stream. Concatenated members
/// are decoded as one stream.
class GzipStreambuf : public std::streambuf {
 public:
  explicit GzipStreambuf(std::unique_ptr<std::istream> source);
  ~GzipStreambuf() override;

  GzipStreambuf(const GzipStreambuf&) = delete;
  GzipStreambuf& operator=(const GzipStreambuf&) = delete;

 protected:
  int_type underflow() override;

 private:
  std::unique_ptr<std::istream> source_;
  z_stream zs_{};
  std::vector<char> in_;
  std::vector<char> out_;
  bool finished_ = false;
  std::uint64_t consumed_ = 0;
};

class GzipIStream : public std::istream {
 public:
  explicit GzipIStream(std::unique_ptr<std::istream> source)
      : std::istream(nullptr), buf_(std::move(source)) {
    rdbuf(&buf_);
    // Lets CorruptGzip from the buffer reach the reader instead of a bare badbit.
    exceptions(std::ios::badbit);
  }

 private:
  GzipStreambuf buf_;
};

/// Opens a file for reading, transparently decompressing gzip content
/// (detected by magic bytes). Throws Error(file_missing) if absent.
std::unique_ptr<std::istream> open_input(const std::filesystem::path& path);

bool is_gzip_file(const std::filesystem::path& path);

/// Wraps a caller-owned stream in a non-owning shared_ptr.
inline std::shared_ptr<std::istream> borrow(std::istream& in) {
  return std::shared_ptr<std::istream>(&in, [](std::istream*) {});
}

/// Writes `data` to `path` through a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view data);

std::string read_file(const std::filesystem::path& path);

}  // namespace irds
