// Copyright 2026 the bftsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <vector>

#include "bftsim/digest.hpp"
#include "bftsim/encoding.hpp"
#include "bftsim/types.hpp"

namespace bftsim {

// 8-byte message authenticator tag.
struct AuthTag {
  std::array<uint8_t, 8> bytes{};
  auto operator<=>(const AuthTag&) const = default;
  std::string hex() const { return to_hex(bytes.data(), bytes.size()); }
};

// Authentication backend. Production systems would use MACs or signatures;
// the simulator needs the same *interface* guarantees (a tag by replica i over
// message m verifies only for (i, m)) plus determinism, so the default backend
// below derives keyed fingerprints from per-node seeds. A real signature
// backend can be slotted in behind this interface (see auth_ed25519.hpp).
class AuthScheme {
 public:
  virtual ~AuthScheme() = default;
  virtual AuthTag sign(NodeId signer, const std::vector<uint8_t>& msg) const = 0;
  virtual bool verify(NodeId signer, const std::vector<uint8_t>& msg, const AuthTag& tag) const = 0;
};

// Deterministic keyed-fingerprint authenticator. Each node id maps to a secret
// derived from the registry seed; tags are FNV-1a over secret || message. The
// simulated adversary never forges tags of correct replicas, so strength
// beyond "distinct keys yield distinct tags" is not required.
class MacAuthenticator : public AuthScheme {
 public:
  explicit MacAuthenticator(uint64_t registry_seed = 0x62667473696d00ULL)
      : registry_seed_(registry_seed) {}

  AuthTag sign(NodeId signer, const std::vector<uint8_t>& msg) const override {
    uint64_t secret = splitmix64(registry_seed_ ^ (0x517cc1b727220a95ULL * (signer + 1)));
    Encoder enc;
    enc.u64(secret);
    enc.raw(msg.data(), msg.size());
    uint64_t h = fnv1a64(enc.bytes().data(), enc.bytes().size());
    AuthTag tag;
    for (int i = 0; i < 8; ++i) tag.bytes[i] = static_cast<uint8_t>(h >> (8 * i));
    return tag;
  }

  bool verify(NodeId signer, const std::vector<uint8_t>& msg, const AuthTag& tag) const override {
    return sign(signer, msg) == tag;
  }

 private:
  uint64_t registry_seed_;
};

}  // namespace bftsim
