// Copyright 2026 the bftsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bftsim/history.hpp"
#include "bftsim/trace.hpp"
#include "bftsim/types.hpp"

namespace bftsim {

// Counters accumulated from trace events. The engine feeds events in as they
// happen; the recount path feeds in events parsed back from a trace file. Both
// go through the same accumulate(), so comparing the two structures end to end
// checks that the serialized trace is complete and faithful.
struct TallyCounts {
  std::map<std::string, uint64_t> sends_by_kind;
  std::map<std::string, std::map<std::string, uint64_t>> sends_by_node_kind;
  std::map<std::string, uint64_t> drops_by_kind;
  std::map<std::string, uint64_t> decides_by_node;
  // instance -> node -> (decide count, first decide time, digest)
  struct DecideInfo {
    uint64_t count = 0;
    SimTime t = 0;
    std::string dig;
    bool operator==(const DecideInfo&) const = default;
  };
  std::map<uint64_t, std::map<std::string, DecideInfo>> decides;
  std::map<std::string, uint64_t> executes_by_node;
  std::map<std::string, uint64_t> regency_changes;   // node -> REGENCY event count
  std::map<std::string, uint64_t> max_regency;       // node -> highest regency reached
  std::map<std::string, uint64_t> checkpoints_by_node;
  std::map<std::string, uint64_t> st_installs_by_node;
  uint64_t events = 0;

  bool operator==(const TallyCounts&) const = default;

  void accumulate(const TraceEvent& ev) {
    ++events;
    switch (ev.type) {
      case TraceEv::Send:
        ++sends_by_kind[ev.kind];
        ++sends_by_node_kind[ev.node][ev.kind];
        break;
      case TraceEv::Recv:
        break;
      case TraceEv::Drop:
        ++drops_by_kind[ev.kind];
        break;
      case TraceEv::Decide: {
        ++decides_by_node[ev.node];
        auto& info = decides[ev.inst.value_or(0)][ev.node];
        if (info.count == 0) {
          info.t = ev.t;
          info.dig = ev.dig;
        }
        ++info.count;
        break;
      }
      case TraceEv::Execute:
        ++executes_by_node[ev.node];
        break;
      case TraceEv::Regency: {
        ++regency_changes[ev.node];
        auto& mx = max_regency[ev.node];
        if (ev.view && *ev.view > mx) mx = *ev.view;
        break;
      }
      case TraceEv::Checkpoint:
        ++checkpoints_by_node[ev.node];
        break;
      case TraceEv::StInstall:
        ++st_installs_by_node[ev.node];
        break;
    }
  }

  uint64_t sends(const std::string& kind) const {
    auto it = sends_by_kind.find(kind);
    return it == sends_by_kind.end() ? 0 : it->second;
  }

  uint64_t node_sends(const std::string& node, const std::string& kind) const {
    auto it = sends_by_node_kind.find(node);
    if (it == sends_by_node_kind.end()) return 0;
    auto jt = it->second.find(kind);
    return jt == it->second.end() ? 0 : jt->second;
  }
};

inline Result<TallyCounts, std::string> tally_from_lines(const std::vector<std::string>& lines) {
  TallyCounts tally;
  for (size_t i = 0; i < lines.size(); ++i) {
    auto ev = parse_trace_line(lines[i]);
    if (!ev) return "unparseable trace line " + std::to_string(i + 1) + ": " + lines[i];
    tally.accumulate(*ev);
  }
  return tally;
}

// Latency statistics per operation kind plus completion counts, derived from
// the client-side history.
struct OpStats {
  uint64_t completed = 0;
  uint64_t incomplete = 0;
  uint64_t latency_sum = 0;  // completed ops only
  uint64_t latency_max = 0;

  double mean() const { return completed ? static_cast<double>(latency_sum) / completed : 0.0; }
};

struct RunMetrics {
  TallyCounts tally;
  OpStats reads;
  OpStats updates;

  uint64_t completed_ops() const { return reads.completed + updates.completed; }
  uint64_t incomplete_ops() const { return reads.incomplete + updates.incomplete; }
};

inline RunMetrics build_metrics(TallyCounts tally, const History& history) {
  RunMetrics m;
  m.tally = std::move(tally);
  for (const auto& rec : history) {
    OpStats& s = rec.kind == OpKind::Read ? m.reads : m.updates;
    if (!rec.completed) {
      ++s.incomplete;
      continue;
    }
    ++s.completed;
    uint64_t lat = rec.response - rec.invoke;
    s.latency_sum += lat;
    if (lat > s.latency_max) s.latency_max = lat;
  }
  return m;
}

// Mean extra time `node` needed to decide instances relative to the first
// correct replica to decide them, averaged over instances both decided. The
// comparison of catch-up strategies rests on this being an exact integer sum.
inline Result<double, std::string> mean_decide_lag(const TallyCounts& tally,
                                                   const std::string& node,
                                                   const std::vector<std::string>& correct) {
  uint64_t sum = 0, count = 0;
  for (const auto& [inst, per_node] : tally.decides) {
    auto it = per_node.find(node);
    if (it == per_node.end()) continue;
    bool have_first = false;
    SimTime first = 0;
    for (const auto& name : correct) {
      auto jt = per_node.find(name);
      if (jt == per_node.end()) continue;
      if (!have_first || jt->second.t < first) {
        first = jt->second.t;
        have_first = true;
      }
    }
    if (!have_first) continue;
    sum += it->second.t - first;
    ++count;
  }
  if (count == 0) return std::string("node decided no instances");
  return static_cast<double>(sum) / static_cast<double>(count);
}

inline std::string metrics_csv(const RunMetrics& m) {
  std::ostringstream os;
  os << "metric,value\n";
  os << "ops_completed," << m.completed_ops() << "\n";
  os << "ops_incomplete," << m.incomplete_ops() << "\n";
  os << "read_completed," << m.reads.completed << "\n";
  os << "read_latency_mean," << m.reads.mean() << "\n";
  os << "update_completed," << m.updates.completed << "\n";
  os << "update_latency_mean," << m.updates.mean() << "\n";
  for (const auto& [kind, cnt] : m.tally.sends_by_kind) os << "sends." << kind << "," << cnt << "\n";
  for (const auto& [kind, cnt] : m.tally.drops_by_kind) os << "drops." << kind << "," << cnt << "\n";
  for (const auto& [node, cnt] : m.tally.decides_by_node) os << "decides." << node << "," << cnt << "\n";
  for (const auto& [node, cnt] : m.tally.executes_by_node) os << "executes." << node << "," << cnt << "\n";
  for (const auto& [node, r] : m.tally.max_regency) os << "regency." << node << "," << r << "\n";
  for (const auto& [node, cnt] : m.tally.checkpoints_by_node)
    os << "checkpoints." << node << "," << cnt << "\n";
  for (const auto& [node, cnt] : m.tally.st_installs_by_node)
    os << "st_installs." << node << "," << cnt << "\n";
  return os.str();
}

}  // namespace bftsim
