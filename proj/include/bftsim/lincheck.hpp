// Copyright 2026 the bftsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "bftsim/history.hpp"
#include "bftsim/types.hpp"

namespace bftsim {

enum class LinVerdict { Ok, Violation, Inconclusive };

struct LinearizabilityReport {
  LinVerdict verdict = LinVerdict::Ok;
  std::string witness;  // human-readable explanation for non-Ok verdicts

  bool ok() const { return verdict == LinVerdict::Ok; }
};

namespace lin_detail {

// Per-key register operation, derived from the client histories.
struct LinOp {
  uint64_t client = 0;
  uint64_t seq = 0;
  bool is_write = false;
  std::string value;   // written value (writes) or observed result (reads)
  SimTime invoke = 0;
  SimTime response = 0;
  bool completed = false;  // incomplete writes are optional: maybe took effect
};

inline std::string describe_op(const LinOp& op) {
  std::ostringstream os;
  os << "c" << op.client << "#" << op.seq << " " << (op.is_write ? "write" : "read") << "(\""
     << op.value << "\") [" << op.invoke << ", ";
  if (op.completed)
    os << op.response << "]";
  else
    os << "incomplete)";
  return os.str();
}

// Search state over one key's operations, sorted by invocation time.
// `base` counts the linearized prefix; `mask` marks linearized operations in
// the 64-wide window starting at base; `last` is the index of the latest
// linearized write, +1 (0 = initial value). States that failed are memoized.
class KeySearch {
 public:
  explicit KeySearch(std::vector<LinOp> ops) : ops_(std::move(ops)) {}

  LinVerdict run(std::string* witness) {
    deepest_ = 0;
    LinVerdict v = dfs(0, 0, 0, 0);
    if (v != LinVerdict::Ok && witness) *witness = explain(v);
    return v;
  }

 private:
  static constexpr size_t kWindow = 64;

  bool linearized(size_t base, uint64_t mask, size_t i) const {
    return i < base || (i < base + kWindow && (mask >> (i - base)) & 1);
  }

  LinVerdict dfs(size_t base, uint64_t mask, size_t last, size_t depth) {
    while (mask & 1) {
      mask >>= 1;
      ++base;
    }
    if (depth > deepest_) {
      deepest_ = depth;
      deep_base_ = base;
      deep_mask_ = mask;
      deep_last_ = last;
    }
    bool all_completed_done = true;
    for (size_t i = base; i < ops_.size(); ++i)
      if (ops_[i].completed && !linearized(base, mask, i)) {
        all_completed_done = false;
        break;
      }
    if (all_completed_done) return LinVerdict::Ok;
    if (!failed_.insert({base, mask, last}).second) return LinVerdict::Violation;

    const std::string& reg = last == 0 ? empty_ : ops_[last - 1].value;
    size_t limit = std::min(ops_.size(), base + kWindow);
    for (size_t i = base; i < limit; ++i) {
      if (linearized(base, mask, i)) continue;
      // Minimality: nothing unlinearized may have finished before op i began.
      bool minimal = true;
      for (size_t j = base; j < i; ++j) {
        if (linearized(base, mask, j)) continue;
        if (ops_[j].completed && ops_[j].response < ops_[i].invoke) {
          minimal = false;
          break;
        }
      }
      if (!minimal) continue;
      if (!ops_[i].is_write && ops_[i].value != reg) continue;  // read must see register
      uint64_t next_mask = mask | (1ULL << (i - base));
      size_t next_last = ops_[i].is_write ? i + 1 : last;
      LinVerdict v = dfs(base, next_mask, next_last, depth + 1);
      if (v != LinVerdict::Violation) return v;  // Ok or Inconclusive bubbles up
    }
    if (ops_.size() > base + kWindow && !linearized(base, mask, base))
      return LinVerdict::Inconclusive;  // window exhausted; cannot conclude
    return LinVerdict::Violation;
  }

  std::string explain(LinVerdict v) const {
    std::ostringstream os;
    if (v == LinVerdict::Inconclusive) {
      os << "too many concurrent operations to decide";
      return os.str();
    }
    os << "no valid linearization order exists\n";
    os << "  operations:\n";
    for (const auto& op : ops_) os << "    " << describe_op(op) << "\n";
    os << "  deepest attempt linearized " << deepest_ << "/" << ops_.size()
       << " operations; register was \""
       << (deep_last_ == 0 ? empty_ : ops_[deep_last_ - 1].value) << "\"; blocked on:";
    size_t limit = std::min(ops_.size(), deep_base_ + kWindow);
    for (size_t i = deep_base_; i < limit; ++i)
      if (!linearized(deep_base_, deep_mask_, i) && ops_[i].completed)
        os << "\n    " << describe_op(ops_[i]);
    return os.str();
  }

  std::vector<LinOp> ops_;
  std::set<std::tuple<size_t, uint64_t, size_t>> failed_;
  std::string empty_;
  size_t deepest_ = 0;
  size_t deep_base_ = 0;
  uint64_t deep_mask_ = 0;
  size_t deep_last_ = 0;
};

}  // namespace lin_detail

// Checks the recorded client operations against linearizability of a per-key
// register store. Completed updates must appear to take effect at one point
// between invocation and response; incomplete updates may take effect at any
// point after invocation or never; completed reads must return the register
// value at their linearization point; incomplete reads are unconstrained.
inline LinearizabilityReport check_linearizability(const History& history) {
  std::map<std::string, std::vector<lin_detail::LinOp>> per_key;
  for (const auto& rec : history) {
    lin_detail::LinOp op;
    op.client = rec.client;
    op.seq = rec.seq;
    op.invoke = rec.invoke;
    op.completed = rec.completed;
    if (rec.kind == OpKind::Update) {
      op.is_write = true;
      op.value = rec.value;
      op.response = rec.completed ? rec.response : 0;
    } else {
      if (!rec.completed) continue;  // unfinished reads constrain nothing
      op.is_write = false;
      op.value = rec.result;
      op.response = rec.response;
    }
    per_key[rec.key].push_back(op);
  }

  for (auto& [key, ops] : per_key) {
    std::sort(ops.begin(), ops.end(), [](const lin_detail::LinOp& a, const lin_detail::LinOp& b) {
      return std::tie(a.invoke, a.response, a.client, a.seq) <
             std::tie(b.invoke, b.response, b.client, b.seq);
    });
    lin_detail::KeySearch search(ops);
    std::string witness;
    LinVerdict v = search.run(&witness);
    if (v != LinVerdict::Ok) {
      LinearizabilityReport report;
      report.verdict = v;
      report.witness = "key \"" + key + "\": " + witness;
      return report;
    }
  }
  return {};
}

}  // namespace bftsim
