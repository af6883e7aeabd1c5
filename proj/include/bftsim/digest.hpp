// Copyright 2026 the bftsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include "bftsim/encoding.hpp"

namespace bftsim {

// 8-byte content digest. FNV-1a is not collision resistant, but the simulator
// only needs a stable, deterministic fingerprint; the adversary model never
// searches for collisions.
struct Digest {
  std::array<uint8_t, 8> bytes{};

  auto operator<=>(const Digest&) const = default;
  bool is_zero() const {
    for (uint8_t b : bytes)
      if (b != 0) return false;
    return true;
  }
  std::string hex() const { return to_hex(bytes.data(), bytes.size()); }
};

inline uint64_t fnv1a64(const uint8_t* data, size_t len, uint64_t seed = 0xcbf29ce484222325ULL) {
  uint64_t h = seed;
  for (size_t i = 0; i < len; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline Digest digest_bytes(const std::vector<uint8_t>& data) {
  uint64_t h = fnv1a64(data.data(), data.size());
  Digest d;
  for (int i = 0; i < 8; ++i) d.bytes[i] = static_cast<uint8_t>(h >> (8 * i));
  return d;
}

inline Digest digest_of(const Encoder& enc) { return digest_bytes(enc.bytes()); }

}  // namespace bftsim
