// Copyright 2026 the bftsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "bftsim/auth.hpp"
#include "bftsim/kvstore.hpp"
#include "bftsim/messages.hpp"
#include "bftsim/proof.hpp"
#include "bftsim/quorum.hpp"
#include "bftsim/simnet.hpp"
#include "bftsim/types.hpp"

namespace bftsim {

// Catch-up strategy for replicas that miss an agreement.
//
//   Baseline:   nothing beyond the ordering protocol. A replica cut off from
//               proposals can watch a quorum of final-phase votes go by and
//               still stay stuck forever, because votes carry only the value
//               digest, not the value.
//   Broadcast:  push. Every replica, upon deciding, first sends the decided
//               value plus its decision proof to everyone, then delivers.
//   Forward:    pull. A replica that sees f+1 final-phase votes for a digest
//               it has no matching proposal for asks 2f other replicas for
//               the decision; holders answer with value + proof, deferred
//               until they decide if necessary. An adopting replica echoes
//               the decision to everyone before delivering it.
struct ReplicaConfig {
  Mode mode = Mode::Baseline;
  Instance checkpoint_period = 64;  // snapshot + garbage-collect cadence, 0 disables
  SimTime propose_timeout = 2000;   // request progress timer
  uint32_t batch_limit = 16;
  bool reply_store_in_checkpoint = true;  // legacy toggle: false omits the reply store
};

// One state-machine-replication replica. Leader-based ordering with three
// phases per instance: the regency leader assigns a batch to the next free
// instance (PROPOSE); replicas vote on the batch digest (PREPARE); after a
// quorum of matching PREPAREs they vote to finalize, attaching an attestation
// (ACCEPT). A quorum of valid ACCEPT attestations both decides the instance
// and *is* the transferable decision proof. Decided batches execute in
// instance order against the key-value store.
class Replica : public Node {
 public:
  Replica(NodeId id, SystemParams params, ReplicaConfig cfg, const AuthScheme* auth)
      : id_(id), params_(params), cfg_(cfg), auth_(auth) {}

  // --- introspection for tests and the harness ---
  NodeId id() const { return id_; }
  Regency regency() const { return regency_; }
  Instance last_executed() const { return last_executed_; }
  const KvStore& kv() const { return kv_; }
  const ReplyStore& reply_store() const { return replies_; }
  const Checkpoint& checkpoint() const { return checkpoint_; }
  bool has_decided(Instance c) const {
    if (c <= gc_horizon_) return true;
    auto it = slots_.find(c);
    return it != slots_.end() && it->second.decided;
  }
  const Proposal* decided_value(Instance c) const {
    auto it = slots_.find(c);
    return it != slots_.end() && it->second.decided ? &it->second.value : nullptr;
  }

  void on_message(NodeId from, const Message& msg, Context& ctx) override {
    switch (msg.kind) {
      case MsgKind::ClientRequest:
        if (msg.request) on_client_request(*msg.request, ctx);
        break;
      case MsgKind::ReadRequest:
        if (msg.request) on_read_request(*msg.request, ctx);
        break;
      case MsgKind::Propose: on_propose(from, msg, ctx); break;
      case MsgKind::Prepare: on_prepare(from, msg, ctx); break;
      case MsgKind::Accept: on_accept(from, msg, ctx); break;
      case MsgKind::FwdDecision: on_fwd_decision(msg, ctx); break;
      case MsgKind::ReqDecision: on_req_decision(from, msg, ctx); break;
      case MsgKind::OutdatedReq: on_outdated_req(msg, ctx); break;
      case MsgKind::Stop: on_stop(from, msg, ctx); break;
      case MsgKind::SyncLog: on_sync_log(from, msg, ctx); break;
      case MsgKind::StRequest: on_st_request(from, ctx); break;
      case MsgKind::StReply: on_st_reply(from, msg, ctx); break;
      case MsgKind::ReplyMsg: break;  // replicas do not consume replies
    }
  }

  void on_timer(const Timer& timer, Context& ctx) override {
    switch (timer.kind) {
      case TimerKind::RequestProgress: on_request_timeout(timer.a, timer.b, ctx); break;
      case TimerKind::StRetry:
        if (st_active_) {
          broadcast(MsgKind::StRequest, ctx);
          st_retry_timer_ = ctx.set_timer(2 * cfg_.propose_timeout, timer);
        }
        break;
      default: break;
    }
  }

 private:
  // Per-instance consensus bookkeeping. PREPARE tallies are per (view, digest)
  // as usual; ACCEPT attestations are pooled per digest across views, since a
  // decision certificate only needs quorum-many distinct signers per digest.
  struct Slot {
    std::map<Regency, Proposal> proposals;  // first valid proposal per view
    std::map<std::pair<Regency, Digest>, std::set<NodeId>> prepares;
    std::map<Digest, std::map<NodeId, Attestation>> accepts;
    std::set<Regency> prepare_sent;
    std::set<Regency> accept_sent;
    std::map<Regency, Digest> own_accepts;  // what we voted to finalize, per view
    bool decided = false;
    Proposal value;
    DecisionProof proof;
    const char* decided_via = "";
    bool probe_sent = false;              // asked peers for this decision already
    std::set<NodeId> forwarded_to;        // requesters served, at most once each
    std::set<NodeId> pending_requesters;  // asked us before we decided
  };

  struct PendingRequest {
    Request req;
    TimerId timer = 0;
    int stage = 0;  // 0: waiting; 1: forwarded to leader; 2: complained
  };

  bool is_leader() const { return leader_of(regency_, params_) == id_; }

  void broadcast(const Message& msg, Context& ctx) {
    for (NodeId r = 0; r < params_.n; ++r)
      if (r != id_) ctx.send(r, msg);
  }
  void broadcast(MsgKind kind, Context& ctx) {
    Message m;
    m.kind = kind;
    broadcast(m, ctx);
  }

  void send_reply(uint64_t client, uint64_t seq, std::string result, bool ordered, Context& ctx) {
    Message m;
    m.kind = MsgKind::ReplyMsg;
    m.reply = Reply{client, seq, std::move(result), ordered};
    ctx.send(static_cast<NodeId>(client), m);
  }

  // ---- client requests ------------------------------------------------------

  void on_client_request(const Request& req, Context& ctx) {
    uint64_t done = replies_.executed_seq(req.client);
    if (done >= req.seq) {
      // Retransmission of an executed request: answer from the reply store.
      if (done == req.seq) send_reply(req.client, req.seq, replies_.lookup(req.client)->result, true, ctx);
      return;
    }
    auto key = std::make_pair(req.client, req.seq);
    if (pending_.count(key)) return;  // retransmission, already tracked
    PendingRequest p;
    p.req = req;
    p.timer = ctx.set_timer(cfg_.propose_timeout, {TimerKind::RequestProgress, req.client, req.seq});
    pending_[key] = p;
    if (is_leader() && !sync_hold_) {
      queue_.push_back(key);
      maybe_propose(ctx);
    }
  }

  // Fast read path: answer directly from local state, no ordering. The client
  // is responsible for collecting enough matching answers.
  void on_read_request(const Request& req, Context& ctx) {
    send_reply(req.client, req.seq, kv_.get(req.key), false, ctx);
  }

  void on_request_timeout(uint64_t client, uint64_t seq, Context& ctx) {
    auto it = pending_.find({client, seq});
    if (it == pending_.end()) return;
    PendingRequest& p = it->second;
    if (p.stage == 0) {
      // First expiry: maybe the client never reached the leader. Relay.
      p.stage = 1;
      NodeId leader = leader_of(regency_, params_);
      if (leader != id_) {
        Message m;
        m.kind = MsgKind::ClientRequest;
        m.request = p.req;
        ctx.send(leader, m);
      }
      p.timer = ctx.set_timer(cfg_.propose_timeout, {TimerKind::RequestProgress, client, seq});
    } else if (p.stage == 1) {
      // Second expiry: the leader is not ordering this request. Complain.
      p.stage = 2;
      send_stop(regency_, ctx);
    }
  }

  // ---- ordering: propose / prepare / accept ----------------------------------

  void maybe_propose(Context& ctx) {
    if (!is_leader() || sync_hold_ || !open_.empty()) return;
    std::vector<Request> batch;
    while (!queue_.empty() && batch.size() < cfg_.batch_limit) {
      auto key = queue_.front();
      queue_.pop_front();
      auto it = pending_.find(key);
      if (it == pending_.end()) continue;  // executed meanwhile
      if (replies_.executed_seq(key.first) >= key.second) continue;
      batch.push_back(it->second.req);
    }
    if (batch.empty()) return;
    Instance c = next_instance_++;
    propose_value(c, Proposal::make(c, regency_, std::move(batch)), ctx);
  }

  void propose_value(Instance c, Proposal p, Context& ctx) {
    open_.insert(c);
    Slot& slot = slots_[c];
    Digest d = p.digest;
    Regency v = p.view;
    slot.proposals[v] = std::move(p);
    broadcast(make_propose(slot.proposals[v]), ctx);
    send_prepare(c, slot, v, d, ctx);
    evaluate(c, slot, ctx);
  }

  void on_propose(NodeId from, const Message& msg, Context& ctx) {
    if (!msg.proposal || msg.instance == 0 || msg.instance <= gc_horizon_) return;
    if (msg.view > regency_) {
      future_[msg.view].push_back({from, msg});
      return;
    }
    if (msg.view < regency_ || from != leader_of(msg.view, params_)) return;
    const Proposal& p = *msg.proposal;
    if (p.instance != msg.instance || p.view != msg.view) return;
    if (Proposal::compute_digest(p.instance, p.batch) != p.digest) return;  // malformed
    Slot& slot = slots_[msg.instance];
    if (!slot.proposals.count(msg.view)) {
      // Keep the first proposal per view; an equivocating second one is
      // ignored here but its digest may already be gathering votes, which the
      // pull trigger in maybe_probe() reacts to.
      slot.proposals[msg.view] = p;
      send_prepare(msg.instance, slot, msg.view, p.digest, ctx);
    }
    evaluate(msg.instance, slot, ctx);
  }

  void send_prepare(Instance c, Slot& slot, Regency v, const Digest& d, Context& ctx) {
    if (slot.prepare_sent.count(v)) return;
    slot.prepare_sent.insert(v);
    slot.prepares[{v, d}].insert(id_);
    broadcast(make_prepare(v, c, d), ctx);
  }

  void on_prepare(NodeId from, const Message& msg, Context& ctx) {
    if (msg.instance == 0 || msg.instance <= gc_horizon_) return;
    if (msg.view > regency_) {
      future_[msg.view].push_back({from, msg});
      return;
    }
    if (msg.view < regency_) return;
    Slot& slot = slots_[msg.instance];
    slot.prepares[{msg.view, msg.digest}].insert(from);
    evaluate(msg.instance, slot, ctx);
  }

  void on_accept(NodeId from, const Message& msg, Context& ctx) {
    if (msg.instance == 0 || msg.instance <= gc_horizon_ || !msg.attestation) return;
    // Finalize votes are not view-gated: attestations from any view count
    // toward the certificate, which is what lets lagging replicas catch up.
    const Attestation& a = *msg.attestation;
    if (a.signer != from || a.instance != msg.instance || a.view != msg.view ||
        a.value_digest != msg.digest)
      return;
    if (!a.verify(*auth_)) return;
    Slot& slot = slots_[msg.instance];
    slot.accepts[a.value_digest][from] = a;
    evaluate(msg.instance, slot, ctx);
  }

  // Drives every transition that new votes or proposals can enable: sending
  // our own finalize vote, deciding, and the pull-mode probe trigger.
  void evaluate(Instance c, Slot& slot, Context& ctx) {
    if (slot.decided) return;

    // Our ACCEPT, once a quorum prepared a digest we hold the proposal for.
    auto pit = slot.proposals.find(regency_);
    if (pit != slot.proposals.end() && !slot.accept_sent.count(regency_)) {
      auto prep = slot.prepares.find({regency_, pit->second.digest});
      if (prep != slot.prepares.end() && prep->second.size() >= quorum_size(params_)) {
        slot.accept_sent.insert(regency_);
        Attestation a = Attestation::make(*auth_, id_, c, regency_, pit->second.digest);
        slot.own_accepts[regency_] = a.value_digest;
        slot.accepts[a.value_digest][id_] = a;
        broadcast(make_accept(a), ctx);
      }
    }

    // Decide on a quorum of matching attestations plus the matching value.
    for (auto& [d, votes] : slot.accepts) {
      if (votes.size() < quorum_size(params_)) continue;
      const Proposal* value = nullptr;
      for (auto& [pv, prop] : slot.proposals)
        if (prop.digest == d) value = &prop;
      if (!value) continue;
      std::vector<Attestation> atts;
      for (auto& [signer, att] : votes) atts.push_back(att);
      auto proof = make_proof(params_, c, d, std::move(atts));
      decide(c, *value, proof.value(), "quorum", ctx);
      return;
    }

    maybe_probe(c, slot, ctx);
  }

  // Pull trigger: f+1 finalize votes for one digest prove a correct replica
  // voted for it; if our proposal is missing or different, the decision may
  // complete with a value we cannot reconstruct, so ask around for it.
  void maybe_probe(Instance c, Slot& slot, Context& ctx) {
    if (cfg_.mode != Mode::Forward || slot.probe_sent || slot.decided) return;
    for (auto& [d, votes] : slot.accepts) {
      if (votes.size() < weak_certificate_size(params_)) continue;
      bool have_value = false;
      for (auto& [pv, prop] : slot.proposals)
        if (prop.digest == d) have_value = true;
      if (have_value) continue;
      send_probe(c, slot, ctx);
      return;
    }
  }

  // Ask the next 2f replicas in ring order. Together with the requester that
  // makes 2f+1 distinct replicas >= one correct member of the deciding quorum
  // once the decision exists.
  void send_probe(Instance c, Slot& slot, Context& ctx) {
    slot.probe_sent = true;
    Message m = make_req_decision(c);
    uint32_t sent = 0;
    for (uint32_t step = 1; step < params_.n && sent < 2 * params_.f; ++step) {
      ctx.send(static_cast<NodeId>((id_ + step) % params_.n), m);
      ++sent;
    }
  }

  void on_req_decision(NodeId from, const Message& msg, Context& ctx) {
    if (msg.instance == 0) return;
    auto it = slots_.find(msg.instance);
    if (it != slots_.end() && it->second.decided) {
      send_fwd_decision(it->second, from, ctx);
      return;
    }
    if (msg.instance <= gc_horizon_) {
      // The decision is garbage-collected; point the requester at our
      // checkpoint instead, vouched for by the checkpoint instance's proof.
      Message m;
      m.kind = MsgKind::OutdatedReq;
      m.instance = checkpoint_.up_to;
      m.proof = checkpoint_.latest_proof;
      ctx.send(from, m);
      return;
    }
    slots_[msg.instance].pending_requesters.insert(from);
  }

  void send_fwd_decision(Slot& slot, NodeId to, Context& ctx) {
    if (!slot.forwarded_to.insert(to).second) return;  // once per requester
    ctx.send(to, make_fwd_decision(slot.value, slot.proof));
  }

  void on_fwd_decision(const Message& msg, Context& ctx) {
    if (!msg.proposal || !msg.proof || msg.instance == 0 || msg.instance <= gc_horizon_) return;
    Slot& slot = slots_[msg.instance];
    if (slot.decided) return;
    const Proposal& value = *msg.proposal;
    const DecisionProof& proof = *msg.proof;
    if (proof.instance != msg.instance || value.instance != msg.instance) return;
    if (Proposal::compute_digest(value.instance, value.batch) != proof.value_digest) return;
    if (!verify_proof_digest(params_, *auth_, proof)) return;
    // Pull mode echoes the decision before delivering it, so the certificate
    // spreads even if the original forwarder reaches nobody else.
    if (cfg_.mode == Mode::Forward) broadcast(make_fwd_decision(value, proof), ctx);
    decide(msg.instance, value, proof, "fwd", ctx);
  }

  // ---- deciding and executing -------------------------------------------------

  void decide(Instance c, const Proposal& value, const DecisionProof& proof, const char* via,
              Context& ctx) {
    if (c <= gc_horizon_) return;
    Slot& slot = slots_[c];
    if (slot.decided) return;
    slot.decided = true;
    slot.value = value;
    slot.proof = proof;
    slot.decided_via = via;
    if (c > max_decided_) max_decided_ = c;
    if (next_instance_ <= c) next_instance_ = c + 1;

    TraceEvent ev;
    ev.type = TraceEv::Decide;
    ev.inst = c;
    ev.view = value.view;
    ev.dig = proof.value_digest.hex();
    ev.via = via;
    ctx.trace(ev);

    // Push mode: everyone learns the decision before it is delivered.
    if (cfg_.mode == Mode::Broadcast) broadcast(make_fwd_decision(slot.value, slot.proof), ctx);

    for (NodeId r : slot.pending_requesters) send_fwd_decision(slot, r, ctx);
    slot.pending_requesters.clear();

    open_.erase(c);
    try_execute(ctx);
    advance_catchup(ctx);
    maybe_propose(ctx);
  }

  void try_execute(Context& ctx) {
    while (true) {
      auto it = slots_.find(last_executed_ + 1);
      if (it == slots_.end() || !it->second.decided) break;
      Instance c = ++last_executed_;
      Slot& slot = it->second;
      for (const Request& req : slot.value.batch) {
        if (replies_.executed_seq(req.client) >= req.seq) continue;  // duplicate
        std::string result =
            req.kind == OpKind::Update ? kv_.put(req.key, req.value) : kv_.get(req.key);
        replies_.record(req.client, req.seq, result);
        send_reply(req.client, req.seq, result, true, ctx);
        drop_pending(req.client, req.seq, ctx);
      }
      TraceEvent ev;
      ev.type = TraceEv::Execute;
      ev.inst = c;
      ev.dig = slot.value.digest.hex();
      ev.nops = static_cast<uint32_t>(slot.value.batch.size());
      ctx.trace(ev);
      maybe_checkpoint(c, ctx);  // may erase the slot; nothing touches it after
    }
  }

  void drop_pending(uint64_t client, uint64_t seq, Context& ctx) {
    auto it = pending_.find({client, seq});
    if (it == pending_.end()) return;
    ctx.cancel_timer(it->second.timer);
    pending_.erase(it);
  }

  void maybe_checkpoint(Instance c, Context& ctx) {
    if (cfg_.checkpoint_period == 0 || c % cfg_.checkpoint_period != 0) return;
    Checkpoint ck;
    ck.up_to = c;
    ck.kv = kv_.data();
    ck.has_reply_store = cfg_.reply_store_in_checkpoint;
    if (ck.has_reply_store) ck.replies = replies_.entries();
    auto it = slots_.find(c);
    if (it != slots_.end()) ck.latest_proof = it->second.proof;
    checkpoint_ = std::move(ck);
    gc_horizon_ = c;
    slots_.erase(slots_.begin(), slots_.upper_bound(c));

    TraceEvent ev;
    ev.type = TraceEv::Checkpoint;
    ev.inst = c;
    ev.dig = checkpoint_.digest().hex();
    ctx.trace(ev);
  }

  // After deciding ahead of a gap (or recovering state), pull the lowest
  // missing decision; the next pull goes out when this one resolves.
  void advance_catchup(Context& ctx) {
    if (cfg_.mode != Mode::Forward) return;
    for (Instance c = last_executed_ + 1; c <= max_decided_; ++c) {
      auto it = slots_.find(c);
      if (it != slots_.end() && it->second.decided) continue;
      Slot& slot = slots_[c];
      if (!slot.probe_sent) send_probe(c, slot, ctx);
      return;
    }
  }

  // ---- regency changes ----------------------------------------------------

  void send_stop(Regency r, Context& ctx) {
    if (!stop_sent_.insert(r).second) return;
    stops_[r].insert(id_);
    Message m;
    m.kind = MsgKind::Stop;
    m.view = r;
    broadcast(m, ctx);
    check_stops(ctx);
  }

  void on_stop(NodeId from, const Message& msg, Context& ctx) {
    if (msg.view < regency_) return;
    stops_[msg.view].insert(from);
    check_stops(ctx);
  }

  // f+1 complaints against the current regency make the change: at least one
  // comes from a correct replica, and f complaints alone never suffice.
  void check_stops(Context& ctx) {
    while (true) {
      auto it = stops_.find(regency_);
      if (it == stops_.end() || it->second.size() < weak_certificate_size(params_)) return;
      advance_regency(regency_ + 1, ctx);
    }
  }

  void advance_regency(Regency nr, Context& ctx) {
    regency_ = nr;
    stops_.erase(stops_.begin(), stops_.lower_bound(nr));
    open_.clear();
    sync_hold_ = is_leader();

    TraceEvent ev;
    ev.type = TraceEv::Regency;
    ev.view = nr;
    ctx.trace(ev);

    // Fresh patience for the new leader.
    for (auto& [key, p] : pending_) {
      ctx.cancel_timer(p.timer);
      p.stage = 0;
      p.timer =
          ctx.set_timer(cfg_.propose_timeout, {TimerKind::RequestProgress, key.first, key.second});
    }

    Message m;
    m.kind = MsgKind::SyncLog;
    m.view = nr;
    m.sync = build_sync_log(nr);
    NodeId leader = leader_of(nr, params_);
    if (leader == id_)
      accept_sync_log(id_, *m.sync, ctx);
    else
      ctx.send(leader, m);

    drain_future(ctx);
  }

  SyncLogContent build_sync_log(Regency nr) const {
    SyncLogContent sync;
    sync.regency = nr;
    sync.last_executed = last_executed_;
    for (const auto& [c, slot] : slots_) {
      if (slot.decided) {
        sync.decided.push_back({c, slot.value, slot.proof});
        continue;
      }
      // Report the newest digest we voted to finalize, with its value; the
      // new leader must re-propose it in case it decided somewhere.
      for (auto it = slot.own_accepts.rbegin(); it != slot.own_accepts.rend(); ++it) {
        for (const auto& [pv, prop] : slot.proposals) {
          if (prop.digest == it->second) {
            sync.accepted.push_back({c, it->first, prop});
            break;
          }
        }
        break;
      }
    }
    for (const auto& [key, p] : pending_) sync.pending.push_back(p.req);
    return sync;
  }

  void on_sync_log(NodeId from, const Message& msg, Context& ctx) {
    if (!msg.sync) return;
    if (msg.view > regency_) {
      future_[msg.view].push_back({from, msg});
      return;
    }
    if (msg.view < regency_ || leader_of(msg.view, params_) != id_) return;
    accept_sync_log(from, *msg.sync, ctx);
  }

  void accept_sync_log(NodeId from, const SyncLogContent& sync, Context& ctx) {
    Regency nr = sync.regency;
    if (nr != regency_ || sync_done_.count(nr)) return;
    syncs_[nr][from] = sync;
    if (syncs_[nr].size() < quorum_size(params_)) return;
    sync_done_.insert(nr);
    takeover(nr, ctx);
  }

  // New leader, after collecting a quorum of sync logs: adopt decisions,
  // re-propose values that might have decided, fill leftover holes with
  // no-op batches, then resume normal batching. Any instance decided anywhere
  // has quorum-many finalize votes, so every quorum of sync logs contains a
  // correct reporter of its value — adopting/re-proposing from a quorum of
  // logs can therefore never contradict an existing decision.
  void takeover(Regency nr, Context& ctx) {
    auto& logs = syncs_[nr];

    std::map<Instance, const SyncLogContent::DecidedEntry*> decided;
    std::map<Instance, const SyncLogContent::AcceptedEvidence*> evidence;
    Instance horizon = 0;
    for (auto& [sender, log] : logs) {
      for (auto& d : log.decided) {
        if (Proposal::compute_digest(d.value.instance, d.value.batch) != d.proof.value_digest)
          continue;
        if (!verify_proof_digest(params_, *auth_, d.proof)) continue;
        decided.emplace(d.instance, &d);
        if (d.instance > horizon) horizon = d.instance;
      }
      for (auto& a : log.accepted) {
        if (Proposal::compute_digest(a.value.instance, a.value.batch) != a.value.digest) continue;
        auto [it, fresh] = evidence.emplace(a.instance, &a);
        if (!fresh && a.view > it->second->view) it->second = &a;
        if (a.instance > horizon) horizon = a.instance;
      }
      if (log.last_executed > horizon) horizon = log.last_executed;
    }

    std::set<std::pair<uint64_t, uint64_t>> batched;
    for (auto& [c, entry] : decided) {
      if (!has_decided(c)) decide(c, entry->value, entry->proof, "sync", ctx);
      for (const Request& r : entry->value.batch) batched.insert({r.client, r.seq});
    }

    sync_hold_ = false;
    for (Instance c = last_executed_ + 1; c <= horizon; ++c) {
      if (has_decided(c)) continue;
      if (slots_.count(c) && slots_[c].proposals.count(nr)) continue;
      auto ev = evidence.find(c);
      std::vector<Request> batch;
      if (ev != evidence.end()) batch = ev->second->value.batch;
      for (const Request& r : batch) batched.insert({r.client, r.seq});
      propose_value(c, Proposal::make(c, nr, std::move(batch)), ctx);
    }
    if (next_instance_ <= horizon) next_instance_ = horizon + 1;

    // Requests reported pending anywhere and not covered above get queued.
    std::set<std::pair<uint64_t, uint64_t>> queued(queue_.begin(), queue_.end());
    auto enqueue = [&](const Request& r) {
      auto key = std::make_pair(r.client, r.seq);
      if (batched.count(key) || queued.count(key)) return;
      if (replies_.executed_seq(r.client) >= r.seq) return;
      if (!pending_.count(key)) {
        PendingRequest p;
        p.req = r;
        p.timer =
            ctx.set_timer(cfg_.propose_timeout, {TimerKind::RequestProgress, r.client, r.seq});
        pending_[key] = p;
      }
      queue_.push_back(key);
      queued.insert(key);
    };
    for (auto& [sender, log] : logs)
      for (const Request& r : log.pending) enqueue(r);
    for (auto& [key, p] : pending_) enqueue(p.req);
    maybe_propose(ctx);
  }

  void drain_future(Context& ctx) {
    auto it = future_.begin();
    while (it != future_.end() && it->first < regency_) it = future_.erase(it);
    if (it == future_.end() || it->first != regency_) return;
    auto buffered = std::move(it->second);
    future_.erase(it);
    for (auto& [from, msg] : buffered) on_message(from, msg, ctx);
  }

  // ---- state transfer -------------------------------------------------------

  void on_outdated_req(const Message& msg, Context& ctx) {
    if (!msg.proof || st_active_) return;
    if (msg.proof->instance != msg.instance || msg.instance <= last_executed_) return;
    if (!verify_proof_digest(params_, *auth_, *msg.proof)) return;
    st_active_ = true;
    st_replies_.clear();
    broadcast(MsgKind::StRequest, ctx);
    st_retry_timer_ = ctx.set_timer(2 * cfg_.propose_timeout, {TimerKind::StRetry, 0, 0});
  }

  void on_st_request(NodeId from, Context& ctx) {
    if (checkpoint_.up_to == 0) return;
    Message m;
    m.kind = MsgKind::StReply;
    m.instance = checkpoint_.up_to;
    m.checkpoint = checkpoint_;
    ctx.send(from, m);
  }

  void on_st_reply(NodeId from, const Message& msg, Context& ctx) {
    if (!st_active_ || !msg.checkpoint) return;
    const Checkpoint& ck = *msg.checkpoint;
    if (ck.up_to <= last_executed_) return;
    StEntry& entry = st_replies_[ck.digest()];
    entry.checkpoint = ck;
    entry.senders.insert(from);
    // f+1 identical digests guarantee a correct replica vouches for the
    // snapshot contents. If no group ever reaches that, the retry timer
    // re-asks until a consistent set of checkpoints exists.
    if (entry.senders.size() < weak_certificate_size(params_)) return;
    install_checkpoint(entry.checkpoint, ctx);
  }

  void install_checkpoint(const Checkpoint& ck, Context& ctx) {
    kv_.restore(ck.kv);
    if (ck.has_reply_store)
      replies_.restore(ck.replies);
    else
      replies_.clear();
    last_executed_ = ck.up_to;
    if (ck.up_to > max_decided_) max_decided_ = ck.up_to;
    if (next_instance_ <= ck.up_to) next_instance_ = ck.up_to + 1;
    gc_horizon_ = std::max(gc_horizon_, ck.up_to);
    slots_.erase(slots_.begin(), slots_.upper_bound(ck.up_to));
    checkpoint_ = ck;
    st_active_ = false;
    ctx.cancel_timer(st_retry_timer_);

    TraceEvent ev;
    ev.type = TraceEv::StInstall;
    ev.inst = ck.up_to;
    ev.dig = ck.digest().hex();
    ctx.trace(ev);

    // The restored reply store may answer requests we were stuck on.
    std::vector<std::pair<uint64_t, uint64_t>> satisfied;
    for (auto& [key, p] : pending_) {
      const auto* e = replies_.lookup(key.first);
      if (!e || e->seq < key.second) continue;
      if (e->seq == key.second) send_reply(key.first, key.second, e->result, true, ctx);
      satisfied.push_back(key);
    }
    for (auto& key : satisfied) drop_pending(key.first, key.second, ctx);

    try_execute(ctx);
    advance_catchup(ctx);
  }

  // ---- data -------------------------------------------------------------------

  NodeId id_;
  SystemParams params_;
  ReplicaConfig cfg_;
  const AuthScheme* auth_;

  Regency regency_ = 0;
  std::map<Regency, std::set<NodeId>> stops_;
  std::set<Regency> stop_sent_;
  std::map<Regency, std::map<NodeId, SyncLogContent>> syncs_;
  std::set<Regency> sync_done_;
  bool sync_hold_ = false;  // incoming leader: no fresh batches until synced
  std::map<Regency, std::vector<std::pair<NodeId, Message>>> future_;

  std::map<Instance, Slot> slots_;
  Instance last_executed_ = 0;
  Instance max_decided_ = 0;
  Instance next_instance_ = 1;
  std::set<Instance> open_;  // instances this leader proposed, still undecided
  std::deque<std::pair<uint64_t, uint64_t>> queue_;
  std::map<std::pair<uint64_t, uint64_t>, PendingRequest> pending_;

  KvStore kv_;
  ReplyStore replies_;
  Checkpoint checkpoint_;
  Instance gc_horizon_ = 0;

  struct StEntry {
    Checkpoint checkpoint;
    std::set<NodeId> senders;
  };
  bool st_active_ = false;
  TimerId st_retry_timer_ = 0;
  std::map<Digest, StEntry> st_replies_;
};

}  // namespace bftsim
