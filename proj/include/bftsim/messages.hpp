// Copyright 2026 the bftsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bftsim/digest.hpp"
#include "bftsim/encoding.hpp"
#include "bftsim/kvstore.hpp"
#include "bftsim/proof.hpp"
#include "bftsim/types.hpp"

namespace bftsim {

enum class OpKind { Read, Update };

inline const char* to_string(OpKind k) { return k == OpKind::Read ? "read" : "update"; }

// Client operation as it travels through the system. `client` is the client's
// node id and doubles as its identity; clients number their operations with a
// per-client sequence so (client, seq) names an operation globally.
struct Request {
  uint64_t client = 0;
  uint64_t seq = 0;
  OpKind kind = OpKind::Update;
  std::string key;
  std::string value;  // empty for reads

  void encode(Encoder& enc) const {
    enc.u64(client);
    enc.u64(seq);
    enc.u8(kind == OpKind::Read ? 0 : 1);
    enc.str(key);
    enc.str(value);
  }

  Digest digest() const {
    Encoder enc;
    encode(enc);
    return digest_of(enc);
  }

  size_t encoded_size() const { return 25 + key.size() + value.size(); }

  bool operator==(const Request&) const = default;
};

// A leader's batch for one consensus instance. The digest binds the instance
// number and the full ordered batch content, but not the view: re-proposing
// the same batch for the same instance in a later view keeps the digest, so
// votes gathered across views remain comparable.
struct Proposal {
  Instance instance = 0;
  Regency view = 0;
  std::vector<Request> batch;
  Digest digest;

  static Digest compute_digest(Instance instance, const std::vector<Request>& batch) {
    Encoder enc;
    enc.u8(0xB0);  // domain separator: proposal
    enc.u64(instance);
    enc.u32(static_cast<uint32_t>(batch.size()));
    for (const auto& r : batch) r.encode(enc);
    return digest_of(enc);
  }

  static Proposal make(Instance instance, Regency view, std::vector<Request> batch) {
    Proposal p{instance, view, std::move(batch), {}};
    p.digest = compute_digest(p.instance, p.batch);
    return p;
  }

  size_t encoded_size() const {
    size_t sz = 28;
    for (const auto& r : batch) sz += r.encoded_size();
    return sz;
  }
};

// Ordered or fast-path reply to a client. `ordered` distinguishes replies
// produced by executing a decided batch from direct read-path replies.
struct Reply {
  uint64_t client = 0;
  uint64_t seq = 0;
  std::string result;
  bool ordered = true;

  Digest result_digest() const {
    Encoder enc;
    enc.u8(0xE1);  // domain separator: reply result
    enc.u64(seq);
    enc.str(result);
    return digest_of(enc);
  }

  size_t encoded_size() const { return 21 + result.size(); }
};

// Per-replica log shipped to the incoming leader after a regency change.
// Decided entries let the leader adopt finished instances; accepted evidence
// pins the values the leader must re-propose for unfinished instances so a
// decision that some replica already reached can never be contradicted.
struct SyncLogContent {
  Regency regency = 0;
  Instance last_executed = 0;

  struct DecidedEntry {
    Instance instance = 0;
    Proposal value;
    DecisionProof proof;
  };
  struct AcceptedEvidence {
    Instance instance = 0;
    Regency view = 0;
    Proposal value;
  };

  std::vector<DecidedEntry> decided;
  std::vector<AcceptedEvidence> accepted;
  std::vector<Request> pending;

  size_t encoded_size() const {
    size_t sz = 24;
    for (const auto& d : decided) sz += 8 + d.value.encoded_size() + d.proof.encoded_size();
    for (const auto& a : accepted) sz += 16 + a.value.encoded_size();
    for (const auto& r : pending) sz += r.encoded_size();
    return sz;
  }
};

enum class MsgKind {
  ClientRequest,  // ordered operation (update, or read on the ordered path)
  ReadRequest,    // fast-path read, answered directly from local state
  Propose,
  Prepare,
  Accept,
  FwdDecision,
  ReqDecision,
  OutdatedReq,
  Stop,
  SyncLog,
  StRequest,
  StReply,
  ReplyMsg,
};

inline const char* kind_name(MsgKind k) {
  switch (k) {
    case MsgKind::ClientRequest: return "REQUEST";
    case MsgKind::ReadRequest: return "READ";
    case MsgKind::Propose: return "PROPOSE";
    case MsgKind::Prepare: return "PREPARE";
    case MsgKind::Accept: return "ACCEPT";
    case MsgKind::FwdDecision: return "FWD-DECISION";
    case MsgKind::ReqDecision: return "REQ-DECISION";
    case MsgKind::OutdatedReq: return "OUTDATED-REQ";
    case MsgKind::Stop: return "STOP";
    case MsgKind::SyncLog: return "SYNC-LOG";
    case MsgKind::StRequest: return "ST-REQUEST";
    case MsgKind::StReply: return "ST-REPLY";
    case MsgKind::ReplyMsg: return "REPLY";
  }
  return "?";
}

// Wire message. One struct with optional payloads keeps the simulator simple;
// per-kind accessors below document which fields each kind carries.
struct Message {
  MsgKind kind = MsgKind::ClientRequest;
  Regency view = 0;
  Instance instance = 0;
  Digest digest;  // PREPARE/ACCEPT: proposal digest being voted

  std::optional<Request> request;              // ClientRequest / ReadRequest
  std::optional<Proposal> proposal;            // Propose / FwdDecision (decided value)
  std::optional<Attestation> attestation;      // Accept
  std::optional<DecisionProof> proof;          // FwdDecision / OutdatedReq
  std::optional<Reply> reply;                  // ReplyMsg
  std::optional<SyncLogContent> sync;          // SyncLog
  std::optional<Checkpoint> checkpoint;        // StReply

  // Digest shown in trace lines: the value the message argues about, if any.
  Digest trace_digest() const {
    switch (kind) {
      case MsgKind::ClientRequest:
      case MsgKind::ReadRequest: return request ? request->digest() : Digest{};
      case MsgKind::Propose: return proposal ? proposal->digest : Digest{};
      case MsgKind::Prepare:
      case MsgKind::Accept: return digest;
      case MsgKind::FwdDecision: return proof ? proof->value_digest : Digest{};
      case MsgKind::OutdatedReq: return proof ? proof->value_digest : Digest{};
      case MsgKind::ReplyMsg: return reply ? reply->result_digest() : Digest{};
      case MsgKind::StReply: return checkpoint ? checkpoint->digest() : Digest{};
      default: return Digest{};
    }
  }

  size_t encoded_size() const {
    size_t sz = 17;  // kind + view + instance
    if (request) sz += request->encoded_size();
    if (proposal) sz += proposal->encoded_size();
    if (attestation) sz += 32;
    if (proof) sz += proof->encoded_size();
    if (reply) sz += reply->encoded_size();
    if (sync) sz += sync->encoded_size();
    if (checkpoint) sz += checkpoint->encoded_size();
    if (kind == MsgKind::Prepare || kind == MsgKind::Accept) sz += 8;
    return sz;
  }
};

inline Message make_propose(const Proposal& p) {
  Message m;
  m.kind = MsgKind::Propose;
  m.view = p.view;
  m.instance = p.instance;
  m.proposal = p;
  return m;
}

inline Message make_prepare(Regency view, Instance instance, const Digest& d) {
  Message m;
  m.kind = MsgKind::Prepare;
  m.view = view;
  m.instance = instance;
  m.digest = d;
  return m;
}

inline Message make_accept(const Attestation& a) {
  Message m;
  m.kind = MsgKind::Accept;
  m.view = a.view;
  m.instance = a.instance;
  m.digest = a.value_digest;
  m.attestation = a;
  return m;
}

inline Message make_fwd_decision(const Proposal& value, const DecisionProof& proof) {
  Message m;
  m.kind = MsgKind::FwdDecision;
  m.view = value.view;
  m.instance = proof.instance;
  m.proposal = value;
  m.proof = proof;
  return m;
}

inline Message make_req_decision(Instance instance) {
  Message m;
  m.kind = MsgKind::ReqDecision;
  m.instance = instance;
  return m;
}

}  // namespace bftsim
