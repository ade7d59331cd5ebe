#include "irds/fetch.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <iostream>
#include <memory>
#include <thread>

#include <httplib.h>
#include <unistd.h>

#include "irds/errors.hpp"
#include "irds/lockfile.hpp"
#include "irds/sha256.hpp"

namespace irds {

namespace fs = std::filesystem;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_hex_digest(std::string_view s) {
  return s.size() == 64 && std::all_of(s.begin(), s.end(), [](unsigned char c) {
           return std::isxdigit(c) != 0;
         });
}

struct ParsedUrl {
  std::string scheme;
  std::string origin;  // scheme://host[:port]
  std::string path;    // starts with '/'
};

ParsedUrl parse_url(const std::string& url) {
  const auto sep = url.find("://");
  if (sep == std::string::npos) {
    throw Error(ErrorKind::network_error, "malformed URL: " + url);
  }
  ParsedUrl out;
  out.scheme = lower(url.substr(0, sep));
  if (out.scheme == "file") {
    out.path = url.substr(sep + 3);
    return out;
  }
  if (out.scheme != "http" && out.scheme != "https") {
    throw Error(ErrorKind::network_error, "unsupported URL scheme: " + url);
  }
  const auto slash = url.find('/', sep + 3);
  out.origin = url.substr(0, slash);
  out.path = slash == std::string::npos ? "/" : url.substr(slash);
  return out;
}

std::unique_ptr<httplib::Client> make_client(const ParsedUrl& url, const FetchOptions& options) {
  auto client = std::make_unique<httplib::Client>(url.origin);
  client->set_follow_location(true);
  client->set_connection_timeout(options.timeout);
  client->set_read_timeout(options.timeout);
  client->set_keep_alive(false);
  return client;
}

std::uint64_t file_size_or_zero(const fs::path& p) {
  std::error_code ec;
  auto n = fs::file_size(p, ec);
  return ec ? 0 : n;
}

void log_line(const FetchOptions& options, const std::string& msg) {
  if (options.log) *options.log << msg << '\n';
}

// Start offset from "bytes <start>-<end>/<total>".
std::optional<std::uint64_t> content_range_start(const std::string& header) {
  const auto sp = header.find(' ');
  const auto dash = header.find('-');
  if (sp == std::string::npos || dash == std::string::npos || dash < sp) return std::nullopt;
  try {
    return std::stoull(header.substr(sp + 1, dash - sp - 1));
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

void finalize(const fs::path& part, const fs::path& dest, std::string_view sha256) {
  const auto actual = sha256_file(part);
  if (actual != lower(sha256)) {
    auto quarantine = dest;
    quarantine += ".quarantine";
    std::error_code ec;
    fs::rename(part, quarantine, ec);
    throw HashMismatch(lower(sha256), actual);
  }
  fs::rename(part, dest);
}

FetchResult copy_local(const ParsedUrl& url, const fs::path& dest, std::string_view sha256) {
  const fs::path source = url.path;
  if (!fs::exists(source)) {
    throw Error(ErrorKind::network_error, "source not found: file://" + url.path);
  }
  auto part = dest;
  part += ".part";
  fs::copy_file(source, part, fs::copy_options::overwrite_existing);
  FetchResult result{dest, file_size_or_zero(part), false, false};
  finalize(part, dest, sha256);
  result.verified = true;
  return result;
}

bool default_license_prompt(const std::string& notice) {
  if (!::isatty(STDIN_FILENO)) return false;
  std::cerr << notice << "\nType 'yes' to accept and continue: " << std::flush;
  std::string answer;
  std::getline(std::cin, answer);
  return answer == "yes";
}

}  // namespace

void DownloadSpec::validate() const {
  if (url.has_value() == manual_instructions.has_value()) {
    throw Error(ErrorKind::registry_error,
                "download spec for " + dest.string() +
                    " needs exactly one of url / manual_instructions");
  }
  if (url && !is_hex_digest(sha256)) {
    throw Error(ErrorKind::registry_error,
                "download spec for " + dest.string() + " needs a sha256 digest");
  }
  if (!sha256.empty() && !is_hex_digest(sha256)) {
    throw Error(ErrorKind::registry_error, "malformed sha256 for " + dest.string());
  }
  if (dest.empty() || dest.is_absolute()) {
    throw Error(ErrorKind::registry_error, "download destination must be a relative path");
  }
}

std::string sha256_hex(std::string_view bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::file_missing, "file not found: " + path.string());
  Sha256 h;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

bool verify(const fs::path& path, std::string_view sha256) {
  return sha256_file(path) == lower(sha256);
}

FetchResult download_resumable(const std::string& url, const fs::path& dest,
                               std::string_view sha256, const FetchOptions& options) {
  const auto parsed = parse_url(url);
  if (dest.has_parent_path()) fs::create_directories(dest.parent_path());
  if (parsed.scheme == "file") return copy_local(parsed, dest, sha256);

  auto part = dest;
  part += ".part";
  auto client = make_client(parsed, options);

  FetchResult result{dest, 0, false, false};
  bool range_supported = false;
  std::uint64_t current = file_size_or_zero(part);
  bool done = false;
  std::string last_error;
  auto backoff = options.initial_backoff;

  for (int attempt = 0; attempt <= options.max_retries && !done; ++attempt) {
    if (attempt > 0) {
      log_line(options, "retrying " + url + " after: " + last_error);
      std::this_thread::sleep_for(backoff);
      backoff = std::min(backoff * 2, options.max_backoff);
    }
    // A leftover .part from an earlier process is worth a ranged probe too.
    const bool send_range = current > 0 && (range_supported || attempt == 0);
    if (!send_range) current = 0;

    std::ofstream out(part, std::ios::binary | (send_range ? std::ios::app : std::ios::trunc));
    if (!out) throw Error(ErrorKind::storage_error, "cannot write " + part.string());

    httplib::Headers headers{{"User-Agent", std::string(user_agent)}};
    if (send_range) headers.emplace("Range", "bytes=" + std::to_string(current) + "-");

    int status = 0;
    bool appending = false;
    auto on_response = [&](const httplib::Response& res) {
      status = res.status;
      if (res.get_header_value("Accept-Ranges") == "bytes") range_supported = true;
      if (res.status == 206) {
        auto start = content_range_start(res.get_header_value("Content-Range"));
        if (!send_range || !start || *start != current) {
          range_supported = false;
          return false;
        }
        range_supported = true;
        appending = current > 0;
        return true;
      }
      if (res.status == 200) {
        if (current > 0) {
          out.close();
          out.open(part, std::ios::binary | std::ios::trunc);
          current = 0;
        }
        return true;
      }
      return false;
    };
    auto on_data = [&](const char* data, std::size_t len) {
      out.write(data, static_cast<std::streamsize>(len));
      current += len;
      result.bytes_fetched += len;
      return static_cast<bool>(out);
    };

    auto res = client->Get(parsed.path, headers, on_response, on_data);
    out.close();
    if (res && (status == 200 || status == 206)) {
      if (appending) result.resumed = true;
      done = true;
    } else if (status == 416 && current > 0 && verify(part, sha256)) {
      // Already complete from an earlier run.
      done = true;
    } else if (status != 0 && status != 200 && status != 206) {
      last_error = "HTTP " + std::to_string(status);
    } else {
      last_error = httplib::to_string(res.error());
      if (appending) result.resumed = true;
    }
  }
  if (!done) {
    throw Error(ErrorKind::network_error, "download of " + url + " failed after " +
                                              std::to_string(options.max_retries + 1) +
                                              " attempts: " + last_error);
  }
  finalize(part, dest, sha256);
  result.verified = true;
  return result;
}

FetchResult ensure_file(const DownloadSpec& spec, const FetchOptions& options) {
  spec.validate();
  const fs::path dest = options.home / spec.dest;
  if (dest.has_parent_path()) fs::create_directories(dest.parent_path());
  auto lock_path = dest;
  lock_path += ".lock";
  auto lock = LockFile::acquire(lock_path, options.stale_lock_after);

  if (fs::exists(dest)) {
    if (spec.sha256.empty() || verify(dest, spec.sha256)) return {dest, 0, false, true};
    if (!spec.url) throw HashMismatch(lower(spec.sha256), sha256_file(dest));
    log_line(options, "existing " + dest.string() + " fails verification; re-downloading");
    auto quarantine = dest;
    quarantine += ".quarantine";
    fs::rename(dest, quarantine);
  }
  if (spec.manual_instructions) {
    throw ManualFileRequired(dest.string(), *spec.manual_instructions);
  }
  if (spec.license_notice) {
    // Shown even when progress logging is off.
    (options.log ? *options.log : std::cerr) << *spec.license_notice << '\n';
    bool accepted = options.accept_licenses;
    if (!accepted) {
      accepted = options.license_prompt ? options.license_prompt(*spec.license_notice)
                                        : default_license_prompt(*spec.license_notice);
    }
    if (!accepted) {
      throw Error(ErrorKind::license_not_accepted,
                  "license for " + spec.dest.string() +
                      " not accepted; rerun interactively or pass --accept-licenses");
    }
  }
  log_line(options, "downloading " + *spec.url + " -> " + dest.string());
  return download_resumable(*spec.url, dest, spec.sha256, options);
}

std::vector<LinkCheck> LinkReport::failures() const {
  std::vector<LinkCheck> out;
  std::copy_if(checks.begin(), checks.end(), std::back_inserter(out),
               [](const LinkCheck& c) { return !c.ok(); });
  return out;
}

LinkReport check_links(std::span<const DownloadSpec> specs, const FetchOptions& options,
                       bool deep) {
  LinkReport report;
  fs::path scratch;
  if (deep) {
    scratch = fs::temp_directory_path() / ("irds-linkcheck-" + std::to_string(::getpid()));
    fs::create_directories(scratch);
  }
  for (const auto& spec : specs) {
    if (!spec.url) continue;
    LinkCheck check;
    check.dest = spec.dest;
    check.url = *spec.url;
    try {
      const auto parsed = parse_url(*spec.url);
      if (parsed.scheme == "file") {
        check.reachable = fs::exists(parsed.path);
        check.status = check.reachable ? 200 : 404;
      } else {
        auto client = make_client(parsed, options);
        httplib::Headers headers{{"User-Agent", std::string(user_agent)}};
        auto res = client->Head(parsed.path, headers);
        if (!res || res->status == 405 || res->status == 501) {
          headers.emplace("Range", "bytes=0-65535");
          res = client->Get(parsed.path, headers);
        }
        if (res) {
          check.status = res->status;
          check.reachable = res->status == 200 || res->status == 206;
        } else {
          check.error = httplib::to_string(res.error());
        }
      }
      if (!check.reachable && check.error.empty()) {
        check.error = "HTTP " + std::to_string(check.status);
      }
      if (deep && check.reachable) {
        auto opts = options;
        opts.log = nullptr;
        const auto target = scratch / ("f" + std::to_string(report.checks.size()));
        try {
          download_resumable(*spec.url, target, spec.sha256, opts);
          check.hash_ok = true;
        } catch (const HashMismatch& e) {
          check.hash_ok = false;
          check.error = e.what();
        }
      }
    } catch (const Error& e) {
      check.reachable = false;
      check.error = e.what();
    }
    report.checks.push_back(std::move(check));
  }
  if (deep) {
    std::error_code ec;
    fs::remove_all(scratch, ec);
  }
  return report;
}

}  // namespace irds
