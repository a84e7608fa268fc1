#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace febsim {

/// FNV-1a 64-bit hash; stable across platforms, used for config/input digests.
inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Hex rendering of fnv1a64, 16 lowercase digits.
inline std::string hex_digest(std::string_view data) {
  static const char* hexd = "0123456789abcdef";
  std::uint64_t h = fnv1a64(data);
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = hexd[h & 0xf];
    h >>= 4;
  }
  return out;
}

}  // namespace febsim
