// Copyright 2026 the bftsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "bftsim/digest.hpp"
#include "bftsim/encoding.hpp"
#include "bftsim/proof.hpp"
#include "bftsim/types.hpp"

namespace bftsim {

// The replicated application: a string/string key-value store. Reads return
// the current value (empty string for absent keys), updates overwrite and
// return "ok/<value>" so that a reply identifies the write it answers.
class KvStore {
 public:
  std::string get(const std::string& key) const {
    auto it = data_.find(key);
    return it == data_.end() ? std::string() : it->second;
  }

  std::string put(const std::string& key, const std::string& value) {
    data_[key] = value;
    return "ok/" + value;
  }

  const std::map<std::string, std::string>& data() const { return data_; }
  void restore(std::map<std::string, std::string> data) { data_ = std::move(data); }

 private:
  std::map<std::string, std::string> data_;
};

// Latest ordered reply per client, used to deduplicate retransmissions and to
// answer them without re-executing. Keeping this table inside checkpoints is
// what lets a replica that recovered via state transfer still answer
// retransmissions of requests it never executed itself.
class ReplyStore {
 public:
  struct Entry {
    uint64_t seq = 0;
    std::string result;
  };

  // Sequence already executed for this client (0 if none).
  uint64_t executed_seq(uint64_t client) const {
    auto it = entries_.find(client);
    return it == entries_.end() ? 0 : it->second.seq;
  }

  const Entry* lookup(uint64_t client) const {
    auto it = entries_.find(client);
    return it == entries_.end() ? nullptr : &it->second;
  }

  void record(uint64_t client, uint64_t seq, std::string result) {
    entries_[client] = Entry{seq, std::move(result)};
  }

  const std::map<uint64_t, Entry>& entries() const { return entries_; }
  void restore(std::map<uint64_t, Entry> entries) { entries_ = std::move(entries); }
  void clear() { entries_.clear(); }

 private:
  std::map<uint64_t, Entry> entries_;
};

// Snapshot taken every checkpoint_period instances. Contains everything a
// lagging replica needs to rejoin: application state, the reply store (unless
// the legacy toggle excludes it), and the decision proof of the checkpoint
// instance so the snapshot's position can be vouched for to third parties.
struct Checkpoint {
  Instance up_to = 0;
  std::map<std::string, std::string> kv;
  bool has_reply_store = false;
  std::map<uint64_t, ReplyStore::Entry> replies;
  DecisionProof latest_proof;

  // Digest over the replicated contents. The proof is deliberately excluded:
  // replicas may hold proofs with different attestation subsets for the same
  // decision, and that must not make their checkpoints "differ".
  Digest digest() const {
    Encoder enc;
    enc.u8(0xC4);  // domain separator: checkpoint
    enc.u64(up_to);
    enc.u32(static_cast<uint32_t>(kv.size()));
    for (const auto& [k, v] : kv) {
      enc.str(k);
      enc.str(v);
    }
    enc.u8(has_reply_store ? 1 : 0);
    if (has_reply_store) {
      enc.u32(static_cast<uint32_t>(replies.size()));
      for (const auto& [client, e] : replies) {
        enc.u64(client);
        enc.u64(e.seq);
        enc.str(e.result);
      }
    }
    return digest_of(enc);
  }

  size_t encoded_size() const {
    size_t sz = 9;
    for (const auto& [k, v] : kv) sz += 8 + k.size() + v.size();
    if (has_reply_store)
      for (const auto& [client, e] : replies) sz += 16 + 4 + e.result.size();
    return sz + latest_proof.encoded_size();
  }
};

}  // namespace bftsim
