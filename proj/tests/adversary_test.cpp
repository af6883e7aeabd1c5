// Copyright 2026 the bftsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftsim/adversary.hpp"

#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "bftsim/messages.hpp"

namespace bftsim {
namespace {

using Action = FilterDecision::Action;

Message propose_msg(Instance inst = 1) {
  Request req{4, 1, OpKind::Update, "x", "v"};
  return make_propose(Proposal::make(inst, 0, {req}));
}

Message reply_msg(uint64_t client, bool ordered, std::string result = "v") {
  Message m;
  m.kind = MsgKind::ReplyMsg;
  m.reply = Reply{client, 1, std::move(result), ordered};
  return m;
}

AttackPolicy base_policy() {
  AttackPolicy policy;
  policy.controlled = {0};
  policy.isolated = {3};
  policy.censored_clients = {4};
  policy.variant = AttackVariant::OmitPropose;
  return policy;
}

TEST(Adversary, NeverTouchesTrafficFromCorrectNodes) {
  ScriptedAdversary adv({4, 1}, base_policy());
  for (NodeId from : {1u, 2u, 3u, 4u, 5u}) {
    EXPECT_EQ(adv.on_send(from, 0, propose_msg(), 0).action, Action::Pass);
    EXPECT_EQ(adv.on_send(from, 3, propose_msg(), 0).action, Action::Pass);
    EXPECT_EQ(adv.on_send(from, 4, reply_msg(4, true), 0).action, Action::Pass);
  }
}

TEST(Adversary, OmissionStarvesOnlyIsolatedPeers) {
  ScriptedAdversary adv({4, 1}, base_policy());
  EXPECT_EQ(adv.on_send(0, 3, propose_msg(), 0).action, Action::Drop);
  EXPECT_EQ(adv.on_send(0, 3, make_prepare(0, 1, digest_bytes({1})), 0).action, Action::Drop);
  EXPECT_EQ(adv.on_send(0, 3, make_req_decision(1), 0).action, Action::Drop);
  EXPECT_EQ(adv.on_send(0, 1, propose_msg(), 0).action, Action::Pass);
  EXPECT_EQ(adv.on_send(0, 2, make_prepare(0, 1, digest_bytes({1})), 0).action, Action::Pass);
}

TEST(Adversary, CensorsRepliesToVictimClientOnly) {
  ScriptedAdversary adv({4, 1}, base_policy());
  EXPECT_EQ(adv.on_send(0, 4, reply_msg(4, true), 0).action, Action::Drop);
  EXPECT_EQ(adv.on_send(0, 4, reply_msg(4, false), 0).action, Action::Drop);
  EXPECT_EQ(adv.on_send(0, 5, reply_msg(5, true), 0).action, Action::Pass);
}

TEST(Adversary, ConflictingProposalIsWellFormedButEmpty) {
  AttackPolicy policy = base_policy();
  policy.variant = AttackVariant::ConflictingPropose;
  ScriptedAdversary adv({4, 1}, policy);

  Message original = propose_msg(7);
  FilterDecision d = adv.on_send(0, 3, original, 0);
  ASSERT_EQ(d.action, Action::Replace);
  ASSERT_TRUE(d.replacement.proposal.has_value());
  const Proposal& fake = *d.replacement.proposal;
  EXPECT_EQ(fake.instance, 7u);
  EXPECT_EQ(fake.view, 0u);
  EXPECT_TRUE(fake.batch.empty());
  // The substitute passes structural validation but names a different value.
  EXPECT_EQ(fake.digest, Proposal::compute_digest(7, {}));
  EXPECT_NE(fake.digest, original.proposal->digest);

  // Everything else to the isolated replica is still omitted, and peers
  // outside the isolation set get the real proposal.
  EXPECT_EQ(adv.on_send(0, 3, make_prepare(0, 7, original.proposal->digest), 0).action,
            Action::Drop);
  EXPECT_EQ(adv.on_send(0, 1, original, 0).action, Action::Pass);
}

TEST(Adversary, SilentVariantDropsAllControlledTraffic) {
  AttackPolicy policy = base_policy();
  policy.variant = AttackVariant::Silent;
  ScriptedAdversary adv({4, 1}, policy);
  EXPECT_EQ(adv.on_send(0, 1, propose_msg(), 0).action, Action::Drop);
  EXPECT_EQ(adv.on_send(0, 3, propose_msg(), 0).action, Action::Drop);
  EXPECT_EQ(adv.on_send(0, 5, reply_msg(5, true), 0).action, Action::Drop);
  EXPECT_EQ(adv.on_send(1, 2, propose_msg(), 0).action, Action::Pass);
}

TEST(Adversary, LiesOnlyOnDirectReadReplies) {
  AttackPolicy policy = base_policy();
  policy.censored_clients.clear();
  policy.lie_on_reads = true;
  ScriptedAdversary adv({4, 1}, policy);

  FilterDecision d = adv.on_send(0, 4, reply_msg(4, false, "fresh"), 0);
  ASSERT_EQ(d.action, Action::Replace);
  ASSERT_TRUE(d.replacement.reply.has_value());
  EXPECT_EQ(d.replacement.reply->result, "");  // pretends the key was never written
  EXPECT_FALSE(d.replacement.reply->ordered);
  EXPECT_EQ(d.replacement.reply->seq, 1u);

  EXPECT_EQ(adv.on_send(0, 4, reply_msg(4, true, "fresh"), 0).action, Action::Pass);
}

TEST(Adversary, DropCoinIsBoundedAndSeedDeterministic) {
  AttackPolicy policy;
  policy.controlled = {0};
  policy.drop_permille = 500;
  policy.seed = 42;

  auto run = [&](uint64_t seed) {
    AttackPolicy p = policy;
    p.seed = seed;
    ScriptedAdversary adv({4, 1}, p);
    std::vector<bool> dropped;
    for (int i = 0; i < 1000; ++i)
      dropped.push_back(adv.on_send(0, 1, propose_msg(i + 1), 0).action == Action::Drop);
    return dropped;
  };

  auto first = run(42);
  auto second = run(42);
  EXPECT_EQ(first, second);

  uint64_t drops = 0;
  for (bool d : first) drops += d;
  EXPECT_GT(drops, 350u);
  EXPECT_LT(drops, 650u);
  EXPECT_NE(run(43), first);
}

TEST(Adversary, PolicyValidationRejectsIllegalPatterns) {
  SystemParams params{4, 1};

  AttackPolicy too_many;
  too_many.controlled = {0, 1};
  EXPECT_TRUE(validate_policy(params, too_many).has_value());

  AttackPolicy overlap;
  overlap.controlled = {0};
  overlap.isolated = {0};
  EXPECT_TRUE(validate_policy(params, overlap).has_value());

  AttackPolicy client_as_replica;
  client_as_replica.controlled = {5};
  EXPECT_TRUE(validate_policy(params, client_as_replica).has_value());

  AttackPolicy replica_as_client;
  replica_as_client.censored_clients = {2};
  EXPECT_TRUE(validate_policy(params, replica_as_client).has_value());

  EXPECT_FALSE(validate_policy(params, base_policy()).has_value());
}

TEST(Adversary, RandomPoliciesAlwaysRespectCorruptionBounds) {
  for (SystemParams params : {SystemParams{4, 1}, SystemParams{7, 2}}) {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 500; ++i) {
      AttackPolicy policy = make_random_policy(rng, params, 2);
      EXPECT_FALSE(validate_policy(params, policy).has_value());
      EXPECT_LE(policy.controlled.size(), params.f);
      EXPECT_LE(policy.isolated.size(), params.f);
      for (NodeId id : policy.censored_clients) {
        EXPECT_GE(id, params.n);
        EXPECT_LT(id, params.n + 2);
      }
    }
  }
}

}  // namespace
}  // namespace bftsim
