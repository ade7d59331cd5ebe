#pragma once

#include <cstddef>
#include <memory>
#include <string>

struct evp_md_ctx_st;

namespace irds {

/// Incremental SHA-256 producing a lowercase hex digest.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(Sha256&&) noexcept;
  Sha256& operator=(Sha256&&) noexcept;

  void update(const void* data, std::size_t len);
  /// Finishes the digest; the object must not be updated afterwards.
  std::string hex();
  /// Raw 32-byte digest.
  std::string digest();

 private:
  struct Free {
    void operator()(evp_md_ctx_st* ctx) const;
  };
  std::unique_ptr<evp_md_ctx_st, Free> ctx_;
};

std::string hex_to_bytes(const std::string& hex);
std::string bytes_to_hex(const std::string& bytes);

}  // namespace irds
