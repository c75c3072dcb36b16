#pragma once

#include <cstdint>
#include <string_view>

namespace recdenoise {

// FNV-1a 64-bit content fingerprints for manifests and idempotence checks
// (not security hashes).
inline std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace recdenoise
