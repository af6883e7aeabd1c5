// Copyright 2026 the bftsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "bftsim/history.hpp"
#include "bftsim/messages.hpp"
#include "bftsim/quorum.hpp"
#include "bftsim/simnet.hpp"
#include "bftsim/types.hpp"

namespace bftsim {

struct ClientOp {
  OpKind kind = OpKind::Update;
  std::string key;
  std::string value;     // ignored for reads
  bool fast = true;      // reads only: use the direct read path first
};

// Completion thresholds. Collecting a full quorum of matching replies is what
// makes the fast read path safe: any two quorums share a correct replica, so a
// read quorum always includes a correct replica that executed the latest
// completed write. The naive threshold f+1 only guarantees one correct
// replica, which may be a stale one.
struct ClientConfig {
  NodeId node = 0;
  SystemParams params;
  uint32_t ordered_threshold = 3;       // matching replies to finish an ordered op
  uint32_t read_threshold = 3;          // matching replies to finish a fast read
  std::vector<ClientOp> ops;
  SimTime start_time = 0;
  SimTime think_time = 1;               // gap between completing an op and the next
  SimTime retransmit_period = 4000;
  SimTime read_fallback = 1500;         // stuck fast read converts to an ordered one
};

// Closed-loop client: one operation in flight, next one submitted after the
// previous completes. Operations are broadcast to all replicas; completion
// requires threshold-many replies agreeing on the result.
class Client : public Node {
 public:
  explicit Client(ClientConfig cfg) : cfg_(std::move(cfg)) {}

  const History& history() const { return history_; }
  uint64_t completed_ops() const { return completed_; }

  void start(Context& ctx) override {
    if (!cfg_.ops.empty())
      ctx.set_timer(cfg_.start_time, {TimerKind::ClientBegin, 0, 0});
  }

  void on_message(NodeId from, const Message& msg, Context& ctx) override {
    if (msg.kind != MsgKind::ReplyMsg || !msg.reply) return;
    if (idx_ >= cfg_.ops.size() || done_ || msg.reply->seq != seq_) return;
    latest_[from] = *msg.reply;

    // Count the largest set of replicas agreeing on one result.
    std::map<Digest, uint32_t> groups;
    for (const auto& [node, reply] : latest_) ++groups[reply.result_digest()];
    uint32_t best = 0;
    const Reply* winner = nullptr;
    for (const auto& [node, reply] : latest_) {
      uint32_t count = groups[reply.result_digest()];
      if (count > best) {
        best = count;
        winner = &reply;
      }
    }
    HistoryRecord& rec = history_.back();
    if (best > rec.matching) rec.matching = best;

    uint32_t threshold =
        cfg_.ops[idx_].kind == OpKind::Read ? cfg_.read_threshold : cfg_.ordered_threshold;
    if (best < threshold) return;

    rec.completed = true;
    rec.response = ctx.now();
    rec.result = winner->result;
    rec.fast_path = cfg_.ops[idx_].kind == OpKind::Read && !converted_;
    ++completed_;
    done_ = true;
    cancel_timers(ctx);
    ++idx_;
    ctx.set_timer(cfg_.think_time, {TimerKind::ClientBegin, 0, 0});
  }

  void on_timer(const Timer& timer, Context& ctx) override {
    switch (timer.kind) {
      case TimerKind::ClientBegin: submit_next(ctx); break;
      case TimerKind::ClientRetransmit:
        if (!done_ && idx_ < cfg_.ops.size()) {
          send_current(ctx);
          retrans_timer_ = ctx.set_timer(cfg_.retransmit_period,
                                         {TimerKind::ClientRetransmit, 0, 0});
        }
        break;
      case TimerKind::ClientReadFallback:
        // The direct read did not assemble a quorum (stale or censored
        // replies); reissue the same operation through the ordered path.
        if (!done_ && idx_ < cfg_.ops.size() && !converted_) {
          converted_ = true;
          send_current(ctx);
        }
        break;
      default: break;
    }
  }

 private:
  void submit_next(Context& ctx) {
    if (idx_ >= cfg_.ops.size()) return;
    const ClientOp& op = cfg_.ops[idx_];
    ++seq_;
    done_ = false;
    converted_ = !(op.kind == OpKind::Read && op.fast);
    latest_.clear();

    HistoryRecord rec;
    rec.client = cfg_.node;
    rec.seq = seq_;
    rec.kind = op.kind;
    rec.key = op.key;
    rec.value = op.value;
    rec.invoke = ctx.now();
    history_.push_back(rec);

    send_current(ctx);
    retrans_timer_ = ctx.set_timer(cfg_.retransmit_period, {TimerKind::ClientRetransmit, 0, 0});
    if (!converted_)
      fallback_timer_ = ctx.set_timer(cfg_.read_fallback, {TimerKind::ClientReadFallback, 0, 0});
  }

  void send_current(Context& ctx) {
    const ClientOp& op = cfg_.ops[idx_];
    Message m;
    m.kind = converted_ ? MsgKind::ClientRequest : MsgKind::ReadRequest;
    m.request = Request{cfg_.node, seq_, op.kind, op.key, op.value};
    for (NodeId r = 0; r < cfg_.params.n; ++r) ctx.send(r, m);
  }

  void cancel_timers(Context& ctx) {
    if (retrans_timer_) ctx.cancel_timer(retrans_timer_);
    if (fallback_timer_) ctx.cancel_timer(fallback_timer_);
    retrans_timer_ = fallback_timer_ = 0;
  }

  ClientConfig cfg_;
  size_t idx_ = 0;
  uint64_t seq_ = 0;
  bool done_ = true;
  bool converted_ = false;
  std::map<NodeId, Reply> latest_;
  TimerId retrans_timer_ = 0;
  TimerId fallback_timer_ = 0;
  uint64_t completed_ = 0;
  History history_;
};

}  // namespace bftsim
