#ifndef ROOMLAY_HASH_HPP
#define ROOMLAY_HASH_HPP

#include <cstdint>
#include <string>
#include <string_view>

namespace roomlay {

// 64-bit FNV-1a. Stable across platforms; used for split assignment and for
// the config/manifest fingerprints in evaluation reports.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) out[i] = digits[v & 0xf];
  return out;
}

}  // namespace roomlay

#endif  // ROOMLAY_HASH_HPP
