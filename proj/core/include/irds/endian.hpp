#pragma once

#include <cstdint>
#include <string>
#include <type_traits>

namespace irds {

template <typename T>
  requires std::is_unsigned_v<T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
  }
}

template <typename T>
  requires std::is_unsigned_v<T>
void set_le(unsigned char* out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xFF);
  }
}

template <typename T>
  requires std::is_unsigned_v<T>
T get_le(const unsigned char* in) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(in[i]) << (8 * i);
  }
  return value;
}

}  // namespace irds
