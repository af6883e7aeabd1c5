// Copyright 2026 the bftsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cassert>
#include <cstdint>
#include <functional>
#include <map>
#include <queue>
#include <random>
#include <set>
#include <vector>

#include "bftsim/messages.hpp"
#include "bftsim/metrics.hpp"
#include "bftsim/trace.hpp"
#include "bftsim/types.hpp"

namespace bftsim {

// Network model. Before GST the scheduler delivers with adversary-chosen
// delays from [pre_delay_min, pre_delay_max] and may "drop" messages between
// correct nodes — modelled, per the partial-synchrony contract that every
// message between correct nodes is eventually delivered, as redelivery after
// GST (i.e. the retransmission that a real reliable channel would perform).
// After GST every hop takes its base delay plus bounded jitter.
struct NetConfig {
  SimTime gst = 0;
  SimTime base_delay = 10;
  std::vector<std::vector<SimTime>> delay_matrix;  // optional per-pair base delays
  SimTime jitter = 0;
  SimTime pre_delay_min = 1;
  SimTime pre_delay_max = 50;
  uint32_t pre_drop_permille = 0;
  uint64_t seed = 1;
};

// A node being down during [from, until) silently loses messages delivered to
// it. Used to make a replica genuinely miss a stretch of instances.
struct DownWindow {
  NodeId node = 0;
  SimTime from = 0;
  SimTime until = 0;
};

enum class TimerKind {
  ClientBegin,
  ClientRetransmit,
  ClientReadFallback,
  RequestProgress,  // replica-side per-request progress timer
  StRetry,
};

struct Timer {
  TimerKind kind = TimerKind::ClientBegin;
  uint64_t a = 0;  // payload, meaning depends on kind
  uint64_t b = 0;
};

using TimerId = uint64_t;

// Interface the engine hands to a node while dispatching one of its events.
class Context {
 public:
  virtual ~Context() = default;
  virtual SimTime now() const = 0;
  virtual void send(NodeId to, const Message& msg) = 0;
  virtual TimerId set_timer(SimTime delay, const Timer& timer) = 0;
  virtual void cancel_timer(TimerId id) = 0;
  virtual void trace(TraceEvent ev) = 0;  // t and node are filled in by the engine
};

// A deterministic single-threaded reactor: all state changes happen inside
// these callbacks, driven by the engine in (time, tiebreak) order.
class Node {
 public:
  virtual ~Node() = default;
  virtual void start(Context& ctx) { (void)ctx; }
  virtual void on_message(NodeId from, const Message& msg, Context& ctx) = 0;
  virtual void on_timer(const Timer& timer, Context& ctx) = 0;
};

// Outbound interception hook; this is where Byzantine behaviour lives. Correct
// replicas and a filter that suppresses or rewrites their traffic are
// equivalent to Byzantine replicas that never forge authenticators.
struct FilterDecision {
  enum class Action { Pass, Drop, Replace };
  Action action = Action::Pass;
  Message replacement;

  static FilterDecision pass() { return {}; }
  static FilterDecision drop() { return {Action::Drop, {}}; }
  static FilterDecision replace(Message m) { return {Action::Replace, std::move(m)}; }
};

class MessageFilter {
 public:
  virtual ~MessageFilter() = default;
  virtual FilterDecision on_send(NodeId from, NodeId to, const Message& msg, SimTime now) = 0;
};

struct RunStatus {
  SimTime end = 0;
  uint64_t events = 0;
  bool quiesced = false;       // event queue ran dry before the horizon
  bool stopped_early = false;  // stop condition fired
};

// Discrete-event simulation engine. Determinism contract: with equal node
// sets, configs and seeds, the event sequence — and therefore the trace — is
// identical run to run. Events are ordered by (time, insertion sequence) and
// all randomness comes from the single seeded engine rng, drawn in event
// order.
class SimNet {
 public:
  explicit SimNet(NetConfig cfg) : cfg_(cfg), rng_(splitmix64(cfg.seed ^ 0x73696d6e6574ULL)) {}

  void add_node(NodeId id, Node* node) {
    assert(nodes_.find(id) == nodes_.end());
    nodes_[id] = node;
  }

  // Replica count, used only to render node names in traces.
  void set_replica_count(uint32_t n) { name_n_ = n; }

  void set_filter(MessageFilter* filter) { filter_ = filter; }
  void add_down_window(const DownWindow& w) { down_.push_back(w); }

  SimTime now() const { return now_; }
  const TraceLog& trace_log() const { return trace_; }
  const TallyCounts& live_tally() const { return live_; }

  RunStatus run_until(SimTime horizon, const std::function<bool()>& stop = {}) {
    if (!started_) {
      started_ = true;
      for (auto& [id, node] : nodes_) {
        Ctx ctx(*this, id);
        node->start(ctx);
      }
    }
    RunStatus status;
    while (!queue_.empty()) {
      const Event& top = queue_.top();
      if (top.at > horizon) {
        now_ = horizon;
        break;
      }
      Event ev = top;
      queue_.pop();
      now_ = ev.at;
      ++status.events;
      dispatch(ev);
      if (stop && stop()) {
        status.stopped_early = true;
        break;
      }
    }
    if (queue_.empty()) status.quiesced = true;
    if (!status.stopped_early && !status.quiesced) now_ = horizon;
    status.end = now_;
    return status;
  }

 private:
  struct Event {
    SimTime at = 0;
    uint64_t seq = 0;
    bool is_timer = false;
    NodeId to = 0;
    NodeId from = 0;
    Message msg;
    TimerId tid = 0;
    Timer timer;
  };

  struct EventAfter {
    bool operator()(const Event& a, const Event& b) const {
      if (a.at != b.at) return a.at > b.at;
      return a.seq > b.seq;
    }
  };

  class Ctx : public Context {
   public:
    Ctx(SimNet& net, NodeId self) : net_(net), self_(self) {}
    SimTime now() const override { return net_.now_; }
    void send(NodeId to, const Message& msg) override { net_.send_from(self_, to, msg); }
    TimerId set_timer(SimTime delay, const Timer& timer) override {
      return net_.schedule_timer(self_, delay, timer);
    }
    void cancel_timer(TimerId id) override { net_.cancelled_.insert(id); }
    void trace(TraceEvent ev) override {
      ev.t = net_.now_;
      ev.node = node_name(self_, net_.name_n_);
      net_.record(ev);
    }

   private:
    SimNet& net_;
    NodeId self_;
  };

  void record(const TraceEvent& ev) {
    trace_.append(ev);
    live_.accumulate(ev);
  }

  bool is_down(NodeId node, SimTime t) const {
    for (const auto& w : down_)
      if (w.node == node && t >= w.from && t < w.until) return true;
    return false;
  }

  SimTime delay_for(NodeId from, NodeId to) {
    SimTime base = cfg_.base_delay;
    if (!cfg_.delay_matrix.empty() && from < cfg_.delay_matrix.size() &&
        to < cfg_.delay_matrix[from].size())
      base = cfg_.delay_matrix[from][to];
    if (now_ < cfg_.gst) {
      if (cfg_.pre_drop_permille > 0 && draw(rng_, 0, 999) < cfg_.pre_drop_permille)
        return (cfg_.gst - now_) + base + draw(rng_, 0, cfg_.jitter);
      return draw(rng_, cfg_.pre_delay_min, cfg_.pre_delay_max);
    }
    return base + draw(rng_, 0, cfg_.jitter);
  }

  void send_from(NodeId from, NodeId to, Message msg) {
    assert(nodes_.count(to));
    assert(to != from);
    if (filter_) {
      FilterDecision d = filter_->on_send(from, to, msg, now_);
      if (d.action == FilterDecision::Action::Drop) {
        record(make_msg_event(TraceEv::Drop, from, to, msg));
        return;
      }
      if (d.action == FilterDecision::Action::Replace) msg = std::move(d.replacement);
    }
    record(make_msg_event(TraceEv::Send, from, to, msg));
    Event ev;
    ev.at = now_ + delay_for(from, to);
    ev.seq = ++seq_;
    ev.to = to;
    ev.from = from;
    ev.msg = std::move(msg);
    queue_.push(std::move(ev));
  }

  TimerId schedule_timer(NodeId node, SimTime delay, const Timer& timer) {
    Event ev;
    ev.at = now_ + delay;
    ev.seq = ++seq_;
    ev.is_timer = true;
    ev.to = node;
    ev.tid = ev.seq;
    ev.timer = timer;
    queue_.push(std::move(ev));
    return ev.tid;
  }

  TraceEvent make_msg_event(TraceEv type, NodeId at_node, NodeId peer, const Message& msg) const {
    TraceEvent ev;
    ev.type = type;
    ev.t = now_;
    ev.node = node_name(at_node, name_n_);
    ev.kind = kind_name(msg.kind);
    ev.inst = msg.instance;
    ev.view = msg.view;
    Digest d = msg.trace_digest();
    if (!d.is_zero()) ev.dig = d.hex();
    ev.peer = node_name(peer, name_n_);
    ev.size = msg.encoded_size();
    return ev;
  }

  void dispatch(const Event& ev) {
    auto it = nodes_.find(ev.to);
    assert(it != nodes_.end());
    if (ev.is_timer) {
      if (cancelled_.count(ev.tid)) {
        cancelled_.erase(ev.tid);
        return;
      }
      Ctx ctx(*this, ev.to);
      it->second->on_timer(ev.timer, ctx);
      return;
    }
    if (is_down(ev.to, now_)) {
      record(make_msg_event(TraceEv::Drop, ev.to, ev.from, ev.msg));
      return;
    }
    record(make_msg_event(TraceEv::Recv, ev.to, ev.from, ev.msg));
    Ctx ctx(*this, ev.to);
    it->second->on_message(ev.from, ev.msg, ctx);
  }

  NetConfig cfg_;
  std::mt19937_64 rng_;
  std::map<NodeId, Node*> nodes_;
  MessageFilter* filter_ = nullptr;
  std::vector<DownWindow> down_;
  std::priority_queue<Event, std::vector<Event>, EventAfter> queue_;
  std::set<TimerId> cancelled_;
  SimTime now_ = 0;
  uint64_t seq_ = 0;
  bool started_ = false;
  uint32_t name_n_ = 0;
  TraceLog trace_;
  TallyCounts live_;
};

}  // namespace bftsim
