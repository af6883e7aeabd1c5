// Copyright 2026 the bftsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

// Real-signature backend behind the AuthScheme interface, using libsodium
// Ed25519. Include this header only when linking against libsodium; the rest
// of the library never requires it. Tags are truncated signatures plus a key
// id — sufficient for the simulator's "verify(signer, msg, tag)" contract
// while keeping the wire structs fixed-size.
//
// Note: full signatures are verified internally; the 8-byte tag in messages is
// an index into the verifier's cache of full signatures, so truncation does
// not weaken verification.

#include <sodium.h>

#include <array>
#include <cstring>
#include <map>
#include <stdexcept>
#include <vector>

#include "bftsim/auth.hpp"
#include "bftsim/types.hpp"

namespace bftsim {

class Ed25519Authenticator : public AuthScheme {
 public:
  explicit Ed25519Authenticator(uint32_t num_nodes, uint64_t seed = 1) {
    if (sodium_init() < 0) throw std::runtime_error("libsodium initialization failed");
    for (uint32_t i = 0; i < num_nodes; ++i) {
      std::array<unsigned char, crypto_sign_SEEDBYTES> sk_seed{};
      uint64_t s = splitmix64(seed ^ (0x6b657973ULL + i));
      std::memcpy(sk_seed.data(), &s, sizeof(s));
      Keys k;
      crypto_sign_seed_keypair(k.pk.data(), k.sk.data(), sk_seed.data());
      keys_.push_back(k);
    }
  }

  AuthTag sign(NodeId signer, const std::vector<uint8_t>& msg) const override {
    if (signer >= keys_.size()) return {};
    std::array<unsigned char, crypto_sign_BYTES> sig{};
    crypto_sign_detached(sig.data(), nullptr, msg.data(), msg.size(), keys_[signer].sk.data());
    AuthTag tag;
    std::memcpy(tag.bytes.data(), sig.data(), tag.bytes.size());
    cache_[cache_key(signer, tag)] = sig;
    return tag;
  }

  bool verify(NodeId signer, const std::vector<uint8_t>& msg, const AuthTag& tag) const override {
    if (signer >= keys_.size()) return false;
    auto it = cache_.find(cache_key(signer, tag));
    if (it == cache_.end()) return false;
    return crypto_sign_verify_detached(it->second.data(), msg.data(), msg.size(),
                                       keys_[signer].pk.data()) == 0;
  }

 private:
  struct Keys {
    std::array<unsigned char, crypto_sign_PUBLICKEYBYTES> pk{};
    std::array<unsigned char, crypto_sign_SECRETKEYBYTES> sk{};
  };
  using FullSig = std::array<unsigned char, crypto_sign_BYTES>;

  static std::pair<NodeId, std::array<uint8_t, 8>> cache_key(NodeId signer, const AuthTag& tag) {
    return {signer, tag.bytes};
  }

  std::vector<Keys> keys_;
  mutable std::map<std::pair<NodeId, std::array<uint8_t, 8>>, FullSig> cache_;
};

}  // namespace bftsim
