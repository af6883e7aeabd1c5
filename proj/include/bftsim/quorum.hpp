// Copyright 2026 the bftsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "bftsim/types.hpp"

namespace bftsim {

// System sizing for a replica group tolerating f Byzantine members out of n.
// Requires n >= 3f + 1. The (Byzantine-majority) quorum is
//   q = ceil((n + f + 1) / 2),
// which equals 2f + 1 for the minimal n = 3f + 1. Any two quorums intersect in
// at least f + 1 replicas, i.e. in at least one correct replica, and a quorum
// is always reachable because q <= n - f.
struct SystemParams {
  uint32_t n = 4;
  uint32_t f = 1;

  static SystemParams checked(uint32_t n, uint32_t f) {
    if (n < 3 * f + 1)
      throw std::invalid_argument("SystemParams: need n >= 3f+1, got n=" + std::to_string(n) +
                                  " f=" + std::to_string(f));
    return SystemParams{n, f};
  }
};

inline uint32_t quorum_size(const SystemParams& p) { return (p.n + p.f + 2) / 2; }

// f + 1 matching messages contain at least one from a correct replica.
inline uint32_t weak_certificate_size(const SystemParams& p) { return p.f + 1; }

// Lower bound on the overlap of any two quorums: 2q - n.
inline uint32_t quorum_intersection(const SystemParams& p) {
  return 2 * quorum_size(p) - p.n;
}

inline NodeId leader_of(Regency r, const SystemParams& p) {
  return static_cast<NodeId>(r % p.n);
}

}  // namespace bftsim
