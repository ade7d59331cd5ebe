#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace irds {

inline constexpr std::string_view user_agent = "irdatakit/0.1.0";
inline constexpr std::string_view empty_sha256 =
    "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855";

/// One source file of a dataset.
///
/// Exactly one of `url` / `manual_instructions` is set. `sha256` is required
/// with a URL and optional for manually placed files.
struct DownloadSpec {
  std::optional<std::string> url;
  std::string sha256;
  std::optional<std::uint64_t> size_hint;
  std::optional<std::string> license_notice;
  /// Relative to the data home directory.
  std::filesystem::path dest;
  std::optional<std::string> manual_instructions;

  /// Throws Error(registry_error) on a malformed spec.
  void validate() const;
};

struct FetchResult {
  std::filesystem::path path;
  std::uint64_t bytes_fetched = 0;
  bool resumed = false;
  bool verified = false;
};

struct FetchOptions {
  std::filesystem::path home;
  /// Retries after the first attempt.
  int max_retries = 5;
  std::chrono::milliseconds initial_backoff{1000};
  std::chrono::milliseconds max_backoff{60000};
  std::chrono::seconds timeout{30};
  std::chrono::seconds stale_lock_after{15 * 60};
  bool accept_licenses = false;
  /// Asked when a license notice has not been accepted up front. The default
  /// prompts on an interactive terminal and declines otherwise.
  std::function<bool(const std::string& notice)> license_prompt;
  /// Receives license notices and progress messages. With nullptr, progress
  /// is silenced and license notices go to stderr.
  std::ostream* log = nullptr;
};

std::string sha256_hex(std::string_view bytes);

/// Throws Error(file_missing) when the file does not exist.
std::string sha256_file(const std::filesystem::path& path);

/// True iff the SHA-256 of the file equals `sha256` (hex, case-insensitive).
bool verify(const std::filesystem::path& path, std::string_view sha256);

/// Downloads `url` into `dest` through `dest.part`, resuming with Range
/// requests when the server advertises support and restarting otherwise.
/// The result is renamed into place only after hash verification; on a
/// mismatch the bytes are moved to `dest.quarantine` and HashMismatch thrown.
FetchResult download_resumable(const std::string& url, const std::filesystem::path& dest,
                               std::string_view sha256, const FetchOptions& options);

/// Makes `home/spec.dest` present and verified, downloading when needed.
FetchResult ensure_file(const DownloadSpec& spec, const FetchOptions& options);

struct LinkCheck {
  std::filesystem::path dest;
  std::string url;
  bool reachable = false;
  int status = 0;
  /// Set in deep mode only.
  std::optional<bool> hash_ok;
  std::string error;

  bool ok() const { return reachable && hash_ok.value_or(true); }
};

struct LinkReport {
  std::vector<LinkCheck> checks;

  std::vector<LinkCheck> failures() const;
  bool ok() const { return failures().empty(); }
};

/// Probes each URL-backed spec (HEAD, falling back to a ranged GET of the
/// first 64 KiB). In deep mode every file is downloaded to a scratch
/// directory and its hash compared.
LinkReport check_links(std::span<const DownloadSpec> specs, const FetchOptions& options,
                       bool deep = false);

}  // namespace irds
