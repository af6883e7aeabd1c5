// Copyright 2026 the bftsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "bftsim/auth.hpp"
#include "bftsim/digest.hpp"
#include "bftsim/quorum.hpp"
#include "bftsim/types.hpp"

namespace bftsim {

// One replica's vote that consensus instance `instance` finishes with a value
// matching `value_digest`. These are exactly the final-phase votes, so a
// replica that decides has q of them at hand for free.
struct Attestation {
  NodeId signer = kNoNode;
  Instance instance = 0;
  Regency view = 0;
  Digest value_digest;
  AuthTag tag;

  static std::vector<uint8_t> signed_bytes(Instance instance, Regency view, const Digest& d) {
    Encoder enc;
    enc.u8(0xA7);  // domain separator: decision attestation
    enc.u64(instance);
    enc.u64(view);
    enc.raw(d.bytes.data(), d.bytes.size());
    return enc.bytes();
  }

  static Attestation make(const AuthScheme& auth, NodeId signer, Instance instance, Regency view,
                          const Digest& d) {
    Attestation a{signer, instance, view, d, {}};
    a.tag = auth.sign(signer, signed_bytes(instance, view, d));
    return a;
  }

  bool verify(const AuthScheme& auth) const {
    return auth.verify(signer, signed_bytes(instance, view, tag_digest()), tag);
  }

 private:
  const Digest& tag_digest() const { return value_digest; }
};

// Transferable certificate that an instance decided on a value with the given
// digest: at least a quorum of attestations from distinct replicas, all over
// the same (instance, digest). Attestations may come from different views;
// quorum intersection still guarantees the digest is the only decidable one.
struct DecisionProof {
  Instance instance = 0;
  Digest value_digest;
  std::vector<Attestation> attestations;

  size_t encoded_size() const { return 16 + attestations.size() * 32; }
};

enum class ProofError { InsufficientAttestations, MixedDigests };

inline const char* to_string(ProofError e) {
  switch (e) {
    case ProofError::InsufficientAttestations: return "InsufficientAttestations";
    case ProofError::MixedDigests: return "MixedDigests";
  }
  return "?";
}

// Assembles a proof from collected attestations. Fails if fewer than
// quorum_size distinct signers are present or if attestations disagree on the
// instance/digest pair.
inline Result<DecisionProof, ProofError> make_proof(const SystemParams& params, Instance instance,
                                                    const Digest& value_digest,
                                                    std::vector<Attestation> attestations) {
  std::set<NodeId> signers;
  std::vector<Attestation> kept;
  for (auto& a : attestations) {
    if (a.instance != instance || a.value_digest != value_digest)
      return ProofError::MixedDigests;
    if (signers.insert(a.signer).second) kept.push_back(a);
  }
  if (kept.size() < quorum_size(params)) return ProofError::InsufficientAttestations;
  return DecisionProof{instance, value_digest, std::move(kept)};
}

// Digest-level verification: quorum-many valid attestations from distinct
// replica ids over (instance, digest). Used both directly (when only the
// digest is claimed, e.g. checkpoint catch-up hints) and as the core of the
// value-level check.
inline bool verify_proof_digest(const SystemParams& params, const AuthScheme& auth,
                                const DecisionProof& proof) {
  if (proof.attestations.size() < quorum_size(params)) return false;
  std::set<NodeId> signers;
  for (const auto& a : proof.attestations) {
    if (a.instance != proof.instance || a.value_digest != proof.value_digest) return false;
    if (a.signer >= params.n) return false;
    if (!signers.insert(a.signer).second) return false;  // duplicate signer
    if (!a.verify(auth)) return false;
  }
  return true;
}

}  // namespace bftsim
