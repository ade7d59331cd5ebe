#include "irds/gzseek.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <zlib.h>

#include "irds/endian.hpp"
#include "irds/errors.hpp"
#include "irds/fetch.hpp"
#include "irds/io.hpp"
#include "irds/lockfile.hpp"
#include "irds/sha256.hpp"

namespace irds {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view chk_magic = "IRGZ1";
constexpr std::uint8_t chk_version = 1;
constexpr std::size_t build_chunk = 1 << 16;
// Small reads keep the compressed bytes consumed close to what decoding needs.
constexpr std::size_t read_chunk = 1 << 14;

struct Inflater {
  explicit Inflater(int window_bits) {
    if (inflateInit2(&zs, window_bits) != Z_OK) throw CorruptGzip(0, "inflateInit2 failed");
  }
  ~Inflater() { inflateEnd(&zs); }
  Inflater(const Inflater&) = delete;
  Inflater& operator=(const Inflater&) = delete;

  z_stream zs{};
};

[[noreturn]] void corrupt(std::uint64_t pos, const z_stream& zs, const char* fallback) {
  throw CorruptGzip(pos, zs.msg ? zs.msg : fallback);
}

std::string compress_window(const std::vector<unsigned char>& window) {
  uLongf len = compressBound(static_cast<uLong>(window.size()));
  std::string out(len, '\0');
  if (compress2(reinterpret_cast<Bytef*>(out.data()), &len, window.data(),
                static_cast<uLong>(window.size()), 9) != Z_OK) {
    throw Error(ErrorKind::storage_error, "cannot compress checkpoint window");
  }
  out.resize(len);
  return out;
}

std::vector<unsigned char> decompress_window(std::string_view bytes) {
  std::vector<unsigned char> window(gzip_window_size);
  uLongf len = static_cast<uLongf>(window.size());
  if (uncompress(window.data(), &len, reinterpret_cast<const Bytef*>(bytes.data()),
                 static_cast<uLong>(bytes.size())) != Z_OK ||
      len != gzip_window_size) {
    throw Error(ErrorKind::storage_error, "corrupt checkpoint window");
  }
  return window;
}

}  // namespace

fs::path checkpoint_path(const fs::path& gz_path) {
  auto p = gz_path;
  p += ".chk";
  return p;
}

std::string CheckpointIndex::serialize() const {
  std::string out(chk_magic);
  out.push_back(static_cast<char>(chk_version));
  const auto digest = hex_to_bytes(source_sha256);
  if (digest.size() != 32) throw Error(ErrorKind::storage_error, "checkpoint index without sha256");
  out += digest;
  put_le<std::uint64_t>(out, interval);
  put_le<std::uint64_t>(out, checkpoints.size());
  put_le<std::uint64_t>(out, total_uncompressed);
  for (const auto& cp : checkpoints) {
    put_le<std::uint64_t>(out, cp.comp_byte);
    out.push_back(static_cast<char>(cp.comp_bit));
    put_le<std::uint64_t>(out, cp.uncomp_offset);
    const auto packed = compress_window(cp.window);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(packed.size()));
    out += packed;
  }
  return out;
}

CheckpointIndex CheckpointIndex::deserialize(std::string_view bytes) {
  auto bad = [](const char* what) {
    return Error(ErrorKind::storage_error, std::string("malformed checkpoint index: ") + what);
  };
  const std::size_t header = chk_magic.size() + 1 + 32 + 8 + 8 + 8;
  if (bytes.size() < header || bytes.substr(0, chk_magic.size()) != chk_magic) throw bad("magic");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (p[5] != chk_version) throw bad("version");
  CheckpointIndex index;
  index.source_sha256 = bytes_to_hex(std::string(bytes.substr(6, 32)));
  index.interval = get_le<std::uint64_t>(p + 38);
  const auto count = get_le<std::uint64_t>(p + 46);
  index.total_uncompressed = get_le<std::uint64_t>(p + 54);
  std::size_t pos = header;
  for (std::uint64_t i = 0; i < count; ++i) {
    if (pos + 21 > bytes.size()) throw bad("truncated entry");
    Checkpoint cp;
    cp.comp_byte = get_le<std::uint64_t>(p + pos);
    cp.comp_bit = p[pos + 8];
    cp.uncomp_offset = get_le<std::uint64_t>(p + pos + 9);
    const auto len = get_le<std::uint32_t>(p + pos + 17);
    pos += 21;
    if (pos + len > bytes.size()) throw bad("truncated window");
    cp.window = decompress_window(bytes.substr(pos, len));
    pos += len;
    index.checkpoints.push_back(std::move(cp));
  }
  if (pos != bytes.size()) throw bad("trailing bytes");
  return index;
}

void CheckpointIndex::save(const fs::path& path) const { write_file_atomic(path, serialize()); }

CheckpointIndex CheckpointIndex::load(const fs::path& path) { return deserialize(read_file(path)); }

CheckpointIndex build_checkpoints(const fs::path& gz_path, std::uint64_t interval) {
  if (interval < min_checkpoint_interval) {
    throw std::invalid_argument("checkpoint interval must be at least 64 KiB");
  }
  std::ifstream in(gz_path, std::ios::binary);
  if (!in) throw Error(ErrorKind::file_missing, "file not found: " + gz_path.string());

  Sha256 sha;
  Inflater inf(15 + 32);
  z_stream& zs = inf.zs;
  std::vector<unsigned char> input(build_chunk);
  std::vector<unsigned char> window(gzip_window_size, 0);

  auto refill = [&]() -> std::size_t {
    in.read(reinterpret_cast<char*>(input.data()), static_cast<std::streamsize>(input.size()));
    const auto n = static_cast<std::size_t>(in.gcount());
    sha.update(input.data(), n);
    zs.next_in = input.data();
    zs.avail_in = static_cast<uInt>(n);
    return n;
  };

  CheckpointIndex index;
  index.interval = interval;
  std::uint64_t totin = 0;
  std::uint64_t totout = 0;
  // Offset 0 needs no checkpoint: reads there start from the file header.
  std::uint64_t next_target = interval;
  bool in_member = false;

  while (true) {
    if (zs.avail_in == 0 && refill() == 0) {
      if (in_member) throw CorruptGzip(totin, "unexpected end of gzip stream");
      break;
    }
    if (!in_member) {
      // Between members: zero padding after the last member ends the data.
      if (totin > 0 && zs.next_in[0] == 0) break;
      in_member = true;
    }
    if (zs.avail_out == 0) {
      zs.next_out = window.data();
      zs.avail_out = static_cast<uInt>(window.size());
    }
    totin += zs.avail_in;
    totout += zs.avail_out;
    int ret = inflate(&zs, Z_BLOCK);
    totin -= zs.avail_in;
    totout -= zs.avail_out;
    if (ret == Z_NEED_DICT || ret == Z_DATA_ERROR || ret == Z_MEM_ERROR || ret == Z_STREAM_ERROR) {
      corrupt(totin, zs, "inflate failed");
    }
    if (ret == Z_STREAM_END) {
      inflateReset(&zs);
      in_member = false;
      continue;
    }
    const bool boundary = (zs.data_type & 128) && !(zs.data_type & 64);
    if (boundary && totout >= next_target) {
      Checkpoint cp;
      cp.comp_byte = totin;
      cp.comp_bit = static_cast<std::uint8_t>(zs.data_type & 7);
      cp.uncomp_offset = totout;
      // The circular window's write head sits at size - avail_out.
      cp.window.resize(gzip_window_size);
      const std::size_t head = window.size() - zs.avail_out;
      std::memcpy(cp.window.data(), window.data() + head, window.size() - head);
      std::memcpy(cp.window.data() + (window.size() - head), window.data(), head);
      index.checkpoints.push_back(std::move(cp));
      next_target = (totout / interval + 1) * interval;
    }
  }
  // Hash whatever trails the data (padding) as well.
  while (refill() > 0) {
  }
  index.total_uncompressed = totout;
  index.source_sha256 = sha.hex();
  return index;
}

CheckpointIndex load_or_build_checkpoints(const fs::path& gz_path, std::uint64_t interval) {
  const auto chk = checkpoint_path(gz_path);
  if (fs::exists(chk)) {
    try {
      auto index = CheckpointIndex::load(chk);
      if (index.source_sha256 == sha256_file(gz_path)) return index;
    } catch (const Error&) {
      // Rebuilt below.
    }
  }
  auto lock_path = chk;
  lock_path += ".lock";
  auto lock = LockFile::acquire(lock_path);
  auto index = build_checkpoints(gz_path, interval);
  index.save(chk);
  return index;
}

SeekableGzip::SeekableGzip(fs::path gz_path, std::shared_ptr<const CheckpointIndex> index,
                           bool verify_source)
    : path_(std::move(gz_path)), index_(std::move(index)) {
  if (!fs::exists(path_)) throw Error(ErrorKind::file_missing, "file not found: " + path_.string());
  if (verify_source) {
    const auto actual = sha256_file(path_);
    if (actual != index_->source_sha256) {
      throw Error(ErrorKind::index_mismatch, "checkpoint index does not match " + path_.string() +
                                                 " (index " + index_->source_sha256 + ", file " +
                                                 actual + ")");
    }
  }
}

std::string SeekableGzip::read_at(std::uint64_t offset, std::uint64_t length) const {
  const auto& idx = *index_;
  if (offset > idx.total_uncompressed || length > idx.total_uncompressed - offset) {
    throw Error(ErrorKind::out_of_range,
                "range [" + std::to_string(offset) + ", +" + std::to_string(length) +
                    ") exceeds decompressed size " + std::to_string(idx.total_uncompressed));
  }
  if (length == 0) return {};

  auto it = std::upper_bound(idx.checkpoints.begin(), idx.checkpoints.end(), offset,
                             [](std::uint64_t off, const Checkpoint& cp) {
                               return off < cp.uncomp_offset;
                             });
  const Checkpoint* cp = it == idx.checkpoints.begin() ? nullptr : &*std::prev(it);

  std::ifstream in(path_, std::ios::binary);
  if (!in) throw Error(ErrorKind::file_missing, "file not found: " + path_.string());
  std::vector<unsigned char> input(read_chunk);
  std::vector<unsigned char> output(1 << 16);
  std::uint64_t read_pos = 0;
  std::uint64_t local_read = 0;

  bool raw = cp != nullptr;
  Inflater inf(raw ? -15 : 15 + 32);
  z_stream& zs = inf.zs;
  std::uint64_t pos = 0;

  auto refill = [&]() -> std::size_t {
    in.read(reinterpret_cast<char*>(input.data()), static_cast<std::streamsize>(input.size()));
    const auto n = static_cast<std::size_t>(in.gcount());
    local_read += n;
    read_pos += n;
    zs.next_in = input.data();
    zs.avail_in = static_cast<uInt>(n);
    return n;
  };

  if (cp) {
    const std::uint64_t start = cp->comp_byte - (cp->comp_bit ? 1 : 0);
    in.seekg(static_cast<std::streamoff>(start));
    read_pos = start;
    if (cp->comp_bit) {
      const int byte = in.get();
      if (byte == std::char_traits<char>::eof()) throw CorruptGzip(start, "checkpoint beyond end");
      ++local_read;
      ++read_pos;
      inflatePrime(&zs, cp->comp_bit, byte >> (8 - cp->comp_bit));
    }
    const auto dict_len = static_cast<std::size_t>(
        std::min<std::uint64_t>(cp->uncomp_offset, gzip_window_size));
    if (dict_len > 0) {
      inflateSetDictionary(&zs, cp->window.data() + (gzip_window_size - dict_len),
                           static_cast<uInt>(dict_len));
    }
    pos = cp->uncomp_offset;
  }

  std::string out;
  out.reserve(length);
  std::uint64_t skip = offset - pos;
  try {
    while (out.size() < length) {
      if (zs.avail_in == 0 && refill() == 0) throw CorruptGzip(read_pos, "unexpected end of data");
      zs.next_out = output.data();
      zs.avail_out = static_cast<uInt>(output.size());
      const int ret = inflate(&zs, Z_NO_FLUSH);
      if (ret == Z_NEED_DICT || ret == Z_DATA_ERROR || ret == Z_MEM_ERROR ||
          ret == Z_STREAM_ERROR) {
        corrupt(read_pos - zs.avail_in, zs, "inflate failed");
      }
      std::size_t produced = output.size() - zs.avail_out;
      std::size_t from = 0;
      if (skip > 0) {
        const auto drop = static_cast<std::size_t>(std::min<std::uint64_t>(skip, produced));
        skip -= drop;
        from = drop;
      }
      const auto take = std::min<std::uint64_t>(produced - from, length - out.size());
      out.append(reinterpret_cast<const char*>(output.data() + from), static_cast<std::size_t>(take));
      if (ret == Z_STREAM_END && out.size() < length) {
        if (raw) {
          // Step over the member trailer (CRC32 + ISIZE).
          std::size_t trailer = 8;
          while (trailer > 0) {
            if (zs.avail_in == 0 && refill() == 0) throw CorruptGzip(read_pos, "truncated trailer");
            const auto n = std::min<std::size_t>(trailer, zs.avail_in);
            zs.next_in += n;
            zs.avail_in -= static_cast<uInt>(n);
            trailer -= n;
          }
          raw = false;
        }
        inflateReset2(&zs, 15 + 32);
      }
    }
  } catch (...) {
    bytes_read_ += local_read;
    throw;
  }
  bytes_read_ += local_read;
  return out;
}

std::string read_at(const fs::path& gz_path, const CheckpointIndex& index, std::uint64_t offset,
                    std::uint64_t length) {
  SeekableGzip reader(gz_path, std::make_shared<const CheckpointIndex>(index));
  return reader.read_at(offset, length);
}

GzipSliceCache::GzipSliceCache(fs::path cache_dir) : dir_(std::move(cache_dir)) {
  fs::create_directories(dir_);
}

void GzipSliceCache::add_source(const std::string& source_id, fs::path gz_path,
                                std::shared_ptr<const CheckpointIndex> index) {
  auto reader = std::make_shared<SeekableGzip>(std::move(gz_path), std::move(index));
  std::lock_guard lock(mutex_);
  sources_[source_id] = std::move(reader);
}

fs::path GzipSliceCache::slice_path(const std::string& source_id, std::uint64_t offset,
                                    std::uint64_t length) const {
  std::string safe = source_id;
  for (auto& c : safe) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_' ||
          c == '/')) {
      c = '_';
    }
  }
  return dir_ / safe / (std::to_string(offset) + "-" + std::to_string(length));
}

std::string GzipSliceCache::cached_fetch(const std::string& source_id, std::uint64_t offset,
                                         std::uint64_t length) {
  const auto path = slice_path(source_id, offset, length);
  std::error_code ec;
  if (fs::exists(path, ec) && fs::file_size(path, ec) == length) {
    hits_.fetch_add(1);
    return read_file(path);
  }
  std::shared_ptr<SeekableGzip> source;
  {
    std::lock_guard lock(mutex_);
    auto it = sources_.find(source_id);
    if (it == sources_.end()) {
      throw Error(ErrorKind::file_missing, "unknown gzip source '" + source_id + "'");
    }
    source = it->second;
  }
  auto data = source->read_at(offset, length);
  misses_.fetch_add(1);
  fs::create_directories(path.parent_path());
  auto lock_path = path;
  lock_path += ".lock";
  auto lock = LockFile::acquire(lock_path);
  write_file_atomic(path, data);
  return data;
}

std::uint64_t GzipSliceCache::source_bytes_read() const {
  std::lock_guard lock(mutex_);
  std::uint64_t total = 0;
  for (const auto& [id, source] : sources_) total += source->compressed_bytes_read();
  return total;
}

void GzipSliceCache::clear() {
  std::lock_guard lock(mutex_);
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir_, ec)) fs::remove_all(entry.path(), ec);
}

}  // namespace irds
