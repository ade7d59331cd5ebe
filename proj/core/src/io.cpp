#include "irds/io.hpp"

#include <fstream>
#include <sstream>

#include <unistd.h>

#include "irds/errors.hpp"

namespace irds {

namespace fs = std::filesystem;

namespace {
constexpr std::size_t chunk_size = 1 << 16;
}

GzipStreambuf::GzipStreambuf(std::unique_ptr<std::istream> source)
    : source_(std::move(source)), in_(chunk_size), out_(chunk_size) {
  if (inflateInit2(&zs_, 15 + 32) != Z_OK) {
    throw CorruptGzip(0, "inflateInit2 failed");
  }
  setg(out_.data(), out_.data(), out_.data());
}

GzipStreambuf::~GzipStreambuf() { inflateEnd(&zs_); }

GzipStreambuf::int_type GzipStreambuf::underflow() {
  if (gptr() < egptr()) return traits_type::to_int_type(*gptr());
  while (!finished_) {
    if (zs_.avail_in == 0) {
      source_->read(in_.data(), static_cast<std::streamsize>(in_.size()));
      const auto got = source_->gcount();
      if (got <= 0) {
        // EOF in the middle of a member is corruption; between members it is
        // the normal end of the stream.
        if (zs_.total_in > 0 || zs_.total_out > 0) {
          throw CorruptGzip(consumed_, "unexpected end of gzip stream");
        }
        finished_ = true;
        break;
      }
      zs_.next_in = reinterpret_cast<Bytef*>(in_.data());
      zs_.avail_in = static_cast<uInt>(got);
    }
    zs_.next_out = reinterpret_cast<Bytef*>(out_.data());
    zs_.avail_out = static_cast<uInt>(out_.size());
    const uInt before_in = zs_.avail_in;
    const int ret = inflate(&zs_, Z_NO_FLUSH);
    consumed_ += before_in - zs_.avail_in;
    if (ret != Z_OK && ret != Z_STREAM_END && ret != Z_BUF_ERROR) {
      throw CorruptGzip(consumed_, zs_.msg ? zs_.msg : "inflate failed");
    }
    const std::size_t produced = out_.size() - zs_.avail_out;
    if (ret == Z_STREAM_END) {
      inflateReset(&zs_);
      // Trailing zero padding after the last member is tolerated.
      if (zs_.avail_in == 0 && source_->peek() == std::char_traits<char>::eof()) {
        finished_ = true;
      } else if (zs_.avail_in > 0 && static_cast<unsigned char>(*zs_.next_in) == 0) {
        finished_ = true;
      }
    }
    if (produced > 0) {
      setg(out_.data(), out_.data(), out_.data() + produced);
      return traits_type::to_int_type(*gptr());
    }
  }
  return traits_type::eof();
}

bool is_gzip_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  unsigned char magic[2] = {0, 0};
  in.read(reinterpret_cast<char*>(magic), 2);
  return in.gcount() == 2 && magic[0] == 0x1f && magic[1] == 0x8b;
}

std::unique_ptr<std::istream> open_input(const fs::path& path) {
  if (!fs::exists(path)) {
    throw Error(ErrorKind::file_missing, "file not found: " + path.string());
  }
  const bool gz = is_gzip_file(path);
  auto file = std::make_unique<std::ifstream>(path, std::ios::binary);
  if (!*file) throw Error(ErrorKind::storage_error, "cannot open " + path.string());
  if (gz) return std::make_unique<GzipIStream>(std::move(file));
  return file;
}

void write_file_atomic(const fs::path& path, std::string_view data) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    out.flush();
    if (!out) throw Error(ErrorKind::storage_error, "cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorKind::storage_error, "cannot rename into " + path.string());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::file_missing, "file not found: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace irds
