// Copyright 2026 the bftsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <optional>
#include <random>
#include <set>
#include <string>

#include "bftsim/messages.hpp"
#include "bftsim/quorum.hpp"
#include "bftsim/simnet.hpp"
#include "bftsim/types.hpp"

namespace bftsim {

// How controlled replicas treat their outbound proposals.
//   OmitPropose:        proposals (and everything else) to isolated replicas
//                       are silently dropped.
//   ConflictingPropose: isolated replicas get a well-formed proposal for the
//                       same instance with a different (empty) batch, so they
//                       vote for a digest nobody else has.
//   Silent:             controlled replicas send nothing at all.
enum class AttackVariant { OmitPropose, ConflictingPropose, Silent };

inline const char* to_string(AttackVariant v) {
  switch (v) {
    case AttackVariant::OmitPropose: return "omit_propose";
    case AttackVariant::ConflictingPropose: return "conflicting_propose";
    case AttackVariant::Silent: return "silent";
  }
  return "?";
}

// A static corruption pattern. Controlled replicas run the correct protocol
// code; Byzantine behaviour is realized entirely by filtering their outbound
// traffic, which covers omission, equivocation via replacement, and lying on
// unordered reads — but never forging another replica's authenticators and
// never touching traffic between correct nodes.
struct AttackPolicy {
  std::set<NodeId> controlled;        // Byzantine replicas, |controlled| <= f
  std::set<NodeId> isolated;          // correct replicas starved by the leader, <= f
  std::set<NodeId> censored_clients;  // client node ids whose replies controlled replicas drop
  AttackVariant variant = AttackVariant::OmitPropose;
  uint32_t drop_permille = 0;         // extra per-message drop coin for controlled senders
  bool lie_on_reads = false;          // answer fast reads with the initial (stale) value
  uint64_t seed = 0;
};

inline std::optional<std::string> validate_policy(const SystemParams& params,
                                                  const AttackPolicy& policy) {
  if (policy.controlled.size() > params.f)
    return "policy.controlled exceeds f=" + std::to_string(params.f);
  if (policy.isolated.size() > params.f)
    return "policy.isolated exceeds f=" + std::to_string(params.f);
  for (NodeId id : policy.controlled)
    if (!is_replica(id, params.n)) return "policy.controlled contains non-replica id";
  for (NodeId id : policy.isolated) {
    if (!is_replica(id, params.n)) return "policy.isolated contains non-replica id";
    if (policy.controlled.count(id)) return "policy.isolated overlaps policy.controlled";
  }
  for (NodeId id : policy.censored_clients)
    if (is_replica(id, params.n)) return "policy.censored_clients contains a replica id";
  return std::nullopt;
}

class ScriptedAdversary : public MessageFilter {
 public:
  ScriptedAdversary(SystemParams params, AttackPolicy policy)
      : params_(params),
        policy_(std::move(policy)),
        rng_(splitmix64(policy_.seed ^ 0x616476ULL)) {}

  const AttackPolicy& policy() const { return policy_; }

  FilterDecision on_send(NodeId from, NodeId to, const Message& msg, SimTime) override {
    if (!policy_.controlled.count(from)) return FilterDecision::pass();

    if (policy_.variant == AttackVariant::Silent) return FilterDecision::drop();
    if (policy_.drop_permille > 0 && draw(rng_, 0, 999) < policy_.drop_permille)
      return FilterDecision::drop();

    if (policy_.isolated.count(to)) {
      if (policy_.variant == AttackVariant::ConflictingPropose && msg.kind == MsgKind::Propose &&
          msg.proposal) {
        Message fake = msg;
        fake.proposal = Proposal::make(msg.proposal->instance, msg.proposal->view, {});
        return FilterDecision::replace(std::move(fake));
      }
      return FilterDecision::drop();
    }

    if (msg.kind == MsgKind::ReplyMsg && msg.reply) {
      if (policy_.censored_clients.count(to)) return FilterDecision::drop();
      if (policy_.lie_on_reads && !msg.reply->ordered) {
        Message stale = msg;
        stale.reply->result = "";  // pretend the key was never written
        return FilterDecision::replace(std::move(stale));
      }
    }
    return FilterDecision::pass();
  }

 private:
  SystemParams params_;
  AttackPolicy policy_;
  std::mt19937_64 rng_;
};

// Draws a random static corruption pattern for campaign runs: variant, up to
// f controlled replicas (biased towards including the initial leader, since
// leader corruption is the interesting case), up to f isolated replicas, an
// optional censored client, and a per-message drop rate.
inline AttackPolicy make_random_policy(std::mt19937_64& rng, const SystemParams& params,
                                       uint32_t num_clients) {
  AttackPolicy policy;
  switch (draw(rng, 0, 2)) {
    case 0: policy.variant = AttackVariant::OmitPropose; break;
    case 1: policy.variant = AttackVariant::ConflictingPropose; break;
    default: policy.variant = AttackVariant::Silent; break;
  }
  uint32_t num_controlled = static_cast<uint32_t>(draw(rng, 0, params.f));
  if (num_controlled > 0 && draw(rng, 0, 1) == 0) policy.controlled.insert(0);
  while (policy.controlled.size() < num_controlled)
    policy.controlled.insert(static_cast<NodeId>(draw(rng, 0, params.n - 1)));
  uint32_t num_isolated = static_cast<uint32_t>(draw(rng, 0, params.f));
  while (policy.isolated.size() < num_isolated) {
    NodeId id = static_cast<NodeId>(draw(rng, 0, params.n - 1));
    if (!policy.controlled.count(id)) policy.isolated.insert(id);
  }
  if (num_clients > 0 && draw(rng, 0, 3) == 0)
    policy.censored_clients.insert(params.n + static_cast<NodeId>(draw(rng, 0, num_clients - 1)));
  policy.drop_permille = static_cast<uint32_t>(draw(rng, 0, 300));
  policy.lie_on_reads = draw(rng, 0, 1) == 0;
  policy.seed = rng();
  return policy;
}

}  // namespace bftsim
