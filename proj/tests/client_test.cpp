// Copyright 2026 the bftsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include "bftsim/client.hpp"

#include <gtest/gtest.h>

#include <map>
#include <memory>
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

// Replica stand-in that answers requests immediately from canned results.
struct EchoReplica : Node {
  std::string read_result = "v";     // direct (unordered) read answers
  std::string ordered_result = "v";  // ordered-path answers
  uint32_t ignore_first = 0;         // receipts to swallow per sequence number
  bool mute = false;
  std::map<uint64_t, uint32_t> seen;

  void on_message(NodeId, const Message& msg, Context& ctx) override {
    if (mute || !msg.request) return;
    if (++seen[msg.request->seq] <= ignore_first) return;
    bool ordered = msg.kind == MsgKind::ClientRequest;
    Message m;
    m.kind = MsgKind::ReplyMsg;
    m.reply = Reply{msg.request->client, msg.request->seq,
                    ordered ? ordered_result : read_result, ordered};
    ctx.send(static_cast<NodeId>(msg.request->client), m);
  }
  void on_timer(const Timer&, Context&) override {}
};

struct Bench {
  SystemParams params{4, 1};
  SimNet sim;
  std::vector<std::unique_ptr<EchoReplica>> replicas;

  explicit Bench(NetConfig net = uniform(10)) : sim(net) {
    sim.set_replica_count(params.n);
    for (NodeId r = 0; r < params.n; ++r) {
      replicas.push_back(std::make_unique<EchoReplica>());
      sim.add_node(r, replicas.back().get());
    }
  }

  ClientConfig base_config() const {
    ClientConfig cfg;
    cfg.node = params.n;
    cfg.params = params;
    cfg.ordered_threshold = 3;
    cfg.read_threshold = 3;
    return cfg;
  }
};

TEST(Client, FastReadCompletesOnMatchingQuorum) {
  Bench bench;
  ClientConfig cfg = bench.base_config();
  cfg.ops = {{OpKind::Read, "x", "", true}};
  Client client(std::move(cfg));
  bench.sim.add_node(4, &client);
  bench.sim.run_until(10000);

  ASSERT_EQ(client.history().size(), 1u);
  const HistoryRecord& rec = client.history()[0];
  EXPECT_TRUE(rec.completed);
  EXPECT_TRUE(rec.fast_path);
  EXPECT_EQ(rec.result, "v");
  EXPECT_EQ(rec.matching, 3u);  // completion fires on the third matching reply
  EXPECT_EQ(rec.response - rec.invoke, 20u);  // one hop out, one hop back
}

TEST(Client, DisagreeingReadsFallBackToOrderedPath) {
  Bench bench;
  bench.replicas[2]->read_result = "stale";
  bench.replicas[3]->read_result = "stale";
  ClientConfig cfg = bench.base_config();
  cfg.read_fallback = 100;
  cfg.ops = {{OpKind::Read, "x", "", true}};
  Client client(std::move(cfg));
  bench.sim.add_node(4, &client);
  bench.sim.run_until(10000);

  ASSERT_EQ(client.history().size(), 1u);
  const HistoryRecord& rec = client.history()[0];
  EXPECT_TRUE(rec.completed);
  EXPECT_FALSE(rec.fast_path);  // had to convert
  EXPECT_EQ(rec.result, "v");
  EXPECT_GE(rec.response - rec.invoke, 100u);
}

TEST(Client, RetransmitsUntilRepliesArrive) {
  Bench bench;
  for (auto& r : bench.replicas) r->ignore_first = 1;
  ClientConfig cfg = bench.base_config();
  cfg.retransmit_period = 200;
  cfg.ops = {{OpKind::Update, "x", "1", false}};
  Client client(std::move(cfg));
  bench.sim.add_node(4, &client);
  bench.sim.run_until(10000);

  ASSERT_EQ(client.history().size(), 1u);
  const HistoryRecord& rec = client.history()[0];
  EXPECT_TRUE(rec.completed);
  EXPECT_GE(rec.response - rec.invoke, 220u);  // full retransmit round
  EXPECT_EQ(rec.result, "v");
}

TEST(Client, BelowThresholdNeverCompletes) {
  Bench bench;
  bench.replicas[2]->ordered_result = "other";
  bench.replicas[3]->mute = true;
  ClientConfig cfg = bench.base_config();
  cfg.ops = {{OpKind::Update, "x", "1", false}};
  Client client(std::move(cfg));
  bench.sim.add_node(4, &client);
  bench.sim.run_until(20000);

  ASSERT_EQ(client.history().size(), 1u);
  const HistoryRecord& rec = client.history()[0];
  EXPECT_FALSE(rec.completed);
  EXPECT_EQ(rec.matching, 2u);  // two matching answers is the best it ever saw
  EXPECT_EQ(client.completed_ops(), 0u);
}

TEST(Client, ClosedLoopSubmitsOpsSequentially) {
  Bench bench;
  ClientConfig cfg = bench.base_config();
  cfg.start_time = 7;
  cfg.ops = {{OpKind::Update, "a", "1", false},
             {OpKind::Update, "b", "2", false},
             {OpKind::Read, "a", "", true}};
  Client client(std::move(cfg));
  bench.sim.add_node(4, &client);
  bench.sim.run_until(10000);

  const History& h = client.history();
  ASSERT_EQ(h.size(), 3u);
  EXPECT_EQ(client.completed_ops(), 3u);
  EXPECT_EQ(h[0].invoke, 7u);
  for (size_t i = 0; i < h.size(); ++i) {
    EXPECT_TRUE(h[i].completed);
    EXPECT_EQ(h[i].seq, i + 1);
    if (i > 0) {
      EXPECT_GT(h[i].invoke, h[i - 1].response);  // strict real-time order
    }
  }
}

}  // namespace
}  // namespace bftsim
