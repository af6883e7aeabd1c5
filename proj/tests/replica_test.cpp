// Copyright 2026 the bftsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftsim/replica.hpp"

#include <gtest/gtest.h>

#include <functional>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "bftsim/simnet.hpp"

namespace bftsim {
namespace {

NetConfig uniform(SimTime delay) {
  NetConfig cfg;
  cfg.gst = 0;
  cfg.base_delay = delay;
  cfg.jitter = 0;
  return cfg;
}

// Client stand-in: fires scripted requests at fixed times (no retransmission,
// no pacing) and records every reply.
struct ScriptedClient : Node {
  struct Entry {
    SimTime at = 0;
    MsgKind kind = MsgKind::ClientRequest;
    Request req;
  };
  NodeId self = 4;
  uint32_t n = 4;
  std::vector<Entry> script;
  std::vector<std::pair<NodeId, Reply>> replies;

  void start(Context& ctx) override {
    for (size_t i = 0; i < script.size(); ++i)
      ctx.set_timer(script[i].at, {TimerKind::ClientBegin, i, 0});
  }
  void on_message(NodeId from, const Message& msg, Context&) override {
    if (msg.kind == MsgKind::ReplyMsg && msg.reply) replies.push_back({from, *msg.reply});
  }
  void on_timer(const Timer& timer, Context& ctx) override {
    const Entry& e = script[timer.a];
    Message m;
    m.kind = e.kind;
    m.request = e.req;
    for (NodeId r = 0; r < n; ++r) ctx.send(r, m);
  }

  uint64_t ordered_replies_for(uint64_t seq, const std::string& result) const {
    uint64_t cnt = 0;
    for (const auto& [from, r] : replies)
      if (r.seq == seq && r.ordered && r.result == result) ++cnt;
    return cnt;
  }
};

struct FnFilter : MessageFilter {
  std::function<FilterDecision(NodeId, NodeId, const Message&)> fn;
  FilterDecision on_send(NodeId from, NodeId to, const Message& msg, SimTime) override {
    return fn ? fn(from, to, msg) : FilterDecision::pass();
  }
};

struct Cluster {
  SystemParams params{4, 1};
  MacAuthenticator auth{123};
  SimNet sim;
  std::vector<std::unique_ptr<Replica>> replicas;
  ScriptedClient client;

  explicit Cluster(ReplicaConfig cfg, NetConfig net = uniform(10)) : sim(net) {
    sim.set_replica_count(params.n);
    for (NodeId r = 0; r < params.n; ++r) {
      replicas.push_back(std::make_unique<Replica>(r, params, cfg, &auth));
      sim.add_node(r, replicas.back().get());
    }
    sim.add_node(client.self, &client);
  }

  Replica& replica(NodeId r) { return *replicas[r]; }

  void update(SimTime at, uint64_t seq, std::string key, std::string value) {
    client.script.push_back(
        {at, MsgKind::ClientRequest,
         Request{client.self, seq, OpKind::Update, std::move(key), std::move(value)}});
  }
};

ReplicaConfig config(Mode mode) {
  ReplicaConfig cfg;
  cfg.mode = mode;
  return cfg;
}

TEST(Replica, FaultFreeClusterDecidesAndExecutes) {
  Cluster cluster(config(Mode::Baseline));
  cluster.update(0, 1, "x", "v");
  cluster.sim.run_until(10000);

  for (NodeId r = 0; r < 4; ++r) {
    EXPECT_TRUE(cluster.replica(r).has_decided(1)) << "r" << r;
    EXPECT_EQ(cluster.replica(r).last_executed(), 1u) << "r" << r;
    EXPECT_EQ(cluster.replica(r).kv().get("x"), "v") << "r" << r;
  }
  EXPECT_EQ(cluster.client.ordered_replies_for(1, "ok/v"), 4u);

  // One decision per replica, all with the same digest.
  const TallyCounts& tally = cluster.sim.live_tally();
  ASSERT_EQ(tally.decides.count(1), 1u);
  const auto& per_node = tally.decides.at(1);
  ASSERT_EQ(per_node.size(), 4u);
  for (const auto& [node, info] : per_node) {
    EXPECT_EQ(info.count, 1u);
    EXPECT_EQ(info.dig, per_node.begin()->second.dig);
  }
}

TEST(Replica, RetransmittedRequestAnsweredWithoutReexecution) {
  Cluster cluster(config(Mode::Baseline));
  cluster.update(0, 1, "x", "v");
  cluster.update(500, 1, "x", "v");  // same request again
  cluster.sim.run_until(10000);

  EXPECT_EQ(cluster.client.ordered_replies_for(1, "ok/v"), 8u);
  const TallyCounts& tally = cluster.sim.live_tally();
  for (NodeId r = 0; r < 4; ++r) {
    EXPECT_EQ(tally.executes_by_node.at(node_name(r, 4)), 1u);
    EXPECT_EQ(cluster.replica(r).reply_store().executed_seq(cluster.client.self), 1u);
  }
}

TEST(Replica, StarvedReplicaStaysBehindWithoutCatchup) {
  Cluster cluster(config(Mode::Baseline));
  FnFilter filter;
  filter.fn = [](NodeId from, NodeId to, const Message&) {
    return from == 0 && to == 3 ? FilterDecision::drop() : FilterDecision::pass();
  };
  cluster.sim.set_filter(&filter);
  cluster.update(0, 1, "x", "v");
  cluster.sim.run_until(50000);

  for (NodeId r = 0; r < 3; ++r) EXPECT_EQ(cluster.replica(r).last_executed(), 1u);
  EXPECT_FALSE(cluster.replica(3).has_decided(1));
  EXPECT_EQ(cluster.replica(3).last_executed(), 0u);
  // It watched the whole vote go by and still had no way to ask for the value.
  EXPECT_EQ(cluster.sim.live_tally().node_sends("r3", "REQ-DECISION"), 0u);
  EXPECT_EQ(cluster.sim.live_tally().node_sends("r3", "REPLY"), 0u);
  // Only the three up-to-date replicas answer (r0 twice: once after executing,
  // once more re-answering the copy r3 relayed to it from its reply store).
  std::set<NodeId> repliers;
  for (const auto& [from, r] : cluster.client.replies)
    if (r.seq == 1 && r.ordered && r.result == "ok/v") repliers.insert(from);
  EXPECT_EQ(repliers.size(), 3u);
  EXPECT_EQ(cluster.client.ordered_replies_for(1, "ok/v"), 4u);
}

TEST(Replica, DecisionBroadcastReachesStarvedReplica) {
  Cluster cluster(config(Mode::Broadcast));
  FnFilter filter;
  filter.fn = [](NodeId from, NodeId to, const Message&) {
    return from == 0 && to == 3 ? FilterDecision::drop() : FilterDecision::pass();
  };
  cluster.sim.set_filter(&filter);
  cluster.update(0, 1, "x", "v");
  cluster.sim.run_until(50000);

  EXPECT_EQ(cluster.replica(3).last_executed(), 1u);
  EXPECT_EQ(cluster.replica(3).kv().get("x"), "v");
  EXPECT_EQ(cluster.client.ordered_replies_for(1, "ok/v"), 4u);
  const auto& per_node = cluster.sim.live_tally().decides.at(1);
  EXPECT_EQ(per_node.at("r3").dig, per_node.at("r1").dig);
}

TEST(Replica, DecisionForwardProbesAndEchoesBeforeDelivery) {
  Cluster cluster(config(Mode::Forward));
  FnFilter filter;
  filter.fn = [](NodeId from, NodeId to, const Message&) {
    return from == 0 && to == 3 ? FilterDecision::drop() : FilterDecision::pass();
  };
  cluster.sim.set_filter(&filter);
  cluster.update(0, 1, "x", "v");
  cluster.sim.run_until(50000);

  EXPECT_EQ(cluster.replica(3).last_executed(), 1u);
  const TallyCounts& tally = cluster.sim.live_tally();
  // Probe goes to the next 2f = 2 replicas in ring order.
  EXPECT_EQ(tally.node_sends("r3", "REQ-DECISION"), 2u);
  // The adopted decision is echoed to all n-1 peers.
  EXPECT_EQ(tally.node_sends("r3", "FWD-DECISION"), 3u);

  // The echo must leave before the replica marks the instance decided.
  int fwd_send = -1, decide = -1;
  const auto& lines = cluster.sim.trace_log().lines();
  for (size_t i = 0; i < lines.size(); ++i) {
    auto ev = parse_trace_line(lines[i]);
    ASSERT_TRUE(ev.has_value());
    if (ev->node != "r3") continue;
    if (fwd_send < 0 && ev->type == TraceEv::Send && ev->kind == "FWD-DECISION")
      fwd_send = static_cast<int>(i);
    if (decide < 0 && ev->type == TraceEv::Decide) decide = static_cast<int>(i);
  }
  ASSERT_GE(fwd_send, 0);
  ASSERT_GE(decide, 0);
  EXPECT_LT(fwd_send, decide);
}

TEST(Replica, EquivocatingProposalCannotSplitDecisions) {
  auto equivocate = [](NodeId from, NodeId to, const Message& msg) {
    if (from != 0 || to != 3) return FilterDecision::pass();
    if (msg.kind == MsgKind::Propose && msg.proposal) {
      Message fake = msg;
      fake.proposal = Proposal::make(msg.proposal->instance, msg.proposal->view, {});
      return FilterDecision::replace(std::move(fake));
    }
    return FilterDecision::drop();
  };

  // Unpatched: the lied-to replica votes for the bogus digest and stalls, but
  // no correct replica ever decides it.
  {
    Cluster cluster(config(Mode::Baseline));
    FnFilter filter;
    filter.fn = equivocate;
    cluster.sim.set_filter(&filter);
    cluster.update(0, 1, "x", "v");
    cluster.sim.run_until(50000);
    EXPECT_FALSE(cluster.replica(3).has_decided(1));
    for (NodeId r = 0; r < 3; ++r) {
      ASSERT_TRUE(cluster.replica(r).has_decided(1));
      EXPECT_FALSE(cluster.replica(r).decided_value(1)->batch.empty());
    }
  }

  // With pull-based catch-up the mismatch between votes and its own proposal
  // is exactly the trigger: the replica fetches and adopts the real decision.
  {
    Cluster cluster(config(Mode::Forward));
    FnFilter filter;
    filter.fn = equivocate;
    cluster.sim.set_filter(&filter);
    cluster.update(0, 1, "x", "v");
    cluster.sim.run_until(50000);
    ASSERT_TRUE(cluster.replica(3).has_decided(1));
    ASSERT_NE(cluster.replica(3).decided_value(1), nullptr);
    EXPECT_FALSE(cluster.replica(3).decided_value(1)->batch.empty());
    EXPECT_EQ(cluster.replica(3).kv().get("x"), "v");
    const auto& per_node = cluster.sim.live_tally().decides.at(1);
    for (const auto& [node, info] : per_node)
      EXPECT_EQ(info.dig, per_node.at("r1").dig) << node;
  }
}

TEST(Replica, SilentLeaderIsReplacedAndRequestCompletes) {
  Cluster cluster(config(Mode::Baseline));
  FnFilter filter;
  filter.fn = [](NodeId from, NodeId, const Message&) {
    return from == 0 ? FilterDecision::drop() : FilterDecision::pass();
  };
  cluster.sim.set_filter(&filter);
  cluster.update(0, 1, "x", "v");
  cluster.sim.run_until(30000);

  const TallyCounts& tally = cluster.sim.live_tally();
  for (NodeId r = 1; r < 4; ++r) {
    EXPECT_EQ(cluster.replica(r).regency(), 1u) << "r" << r;
    EXPECT_EQ(cluster.replica(r).last_executed(), 1u) << "r" << r;
    EXPECT_EQ(tally.regency_changes.at(node_name(r, 4)), 1u);
  }
  EXPECT_EQ(cluster.client.ordered_replies_for(1, "ok/v"), 3u);
}

TEST(Replica, CheckpointGarbageCollectsExecutedInstances) {
  ReplicaConfig cfg = config(Mode::Baseline);
  cfg.checkpoint_period = 4;
  Cluster cluster(cfg);
  for (uint64_t i = 1; i <= 6; ++i)
    cluster.update(300 * (i - 1), i, "k" + std::to_string(i), "v");
  cluster.sim.run_until(30000);

  const TallyCounts& tally = cluster.sim.live_tally();
  for (NodeId r = 0; r < 4; ++r) {
    EXPECT_EQ(cluster.replica(r).last_executed(), 6u);
    EXPECT_EQ(cluster.replica(r).checkpoint().up_to, 4u);
    EXPECT_TRUE(cluster.replica(r).has_decided(3));  // covered by the checkpoint
    EXPECT_EQ(tally.checkpoints_by_node.at(node_name(r, 4)), 1u);
  }
  // All replicas snapshot identical replicated state.
  EXPECT_EQ(cluster.replica(0).checkpoint().digest(), cluster.replica(3).checkpoint().digest());
}

TEST(Replica, LaggardCrossesGcHorizonViaStateTransfer) {
  ReplicaConfig cfg = config(Mode::Forward);
  cfg.checkpoint_period = 4;
  Cluster cluster(cfg);
  cluster.sim.add_down_window({3, 0, 2000});
  for (uint64_t i = 1; i <= 6; ++i)
    cluster.update(300 * (i - 1), i, "k" + std::to_string(i), "v");
  cluster.update(2100, 7, "k7", "v");
  cluster.sim.run_until(30000);

  const TallyCounts& tally = cluster.sim.live_tally();
  EXPECT_EQ(tally.st_installs_by_node.at("r3"), 1u);
  EXPECT_EQ(cluster.replica(3).last_executed(), 7u);
  EXPECT_EQ(cluster.replica(3).kv().data(), cluster.replica(1).kv().data());
  // Instances 1-4 were garbage-collected at the peers; 5 and 6 arrived as
  // forwarded decisions after the snapshot install.
  EXPECT_EQ(cluster.replica(3).checkpoint().up_to, 4u);
  EXPECT_EQ(cluster.client.ordered_replies_for(7, "ok/v"), 4u);
}

}  // namespace
}  // namespace bftsim
