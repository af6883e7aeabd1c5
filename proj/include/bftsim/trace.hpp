// Copyright 2026 the bftsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bftsim/types.hpp"

namespace bftsim {

enum class TraceEv { Send, Recv, Drop, Decide, Execute, Checkpoint, Regency, StInstall };

inline const char* to_string(TraceEv ev) {
  switch (ev) {
    case TraceEv::Send: return "SEND";
    case TraceEv::Recv: return "RECV";
    case TraceEv::Drop: return "DROP";
    case TraceEv::Decide: return "DECIDE";
    case TraceEv::Execute: return "EXECUTE";
    case TraceEv::Checkpoint: return "CHECKPOINT";
    case TraceEv::Regency: return "REGENCY";
    case TraceEv::StInstall: return "ST-INSTALL";
  }
  return "?";
}

inline std::optional<TraceEv> trace_ev_from(const std::string& s) {
  for (TraceEv ev : {TraceEv::Send, TraceEv::Recv, TraceEv::Drop, TraceEv::Decide,
                     TraceEv::Execute, TraceEv::Checkpoint, TraceEv::Regency, TraceEv::StInstall})
    if (s == to_string(ev)) return ev;
  return std::nullopt;
}

// One line of the run trace. The textual form is `key=value` tokens separated
// by single spaces, keys in fixed order, absent fields omitted. It is the
// stable external format: equal runs produce byte-identical trace files, and
// the metrics recount works from parsed lines alone.
struct TraceEvent {
  TraceEv type = TraceEv::Send;
  SimTime t = 0;
  std::string node;                 // emitting node, e.g. "r0" or "c1"
  std::string kind;                 // message kind for Send/Recv/Drop
  std::optional<Instance> inst;
  std::optional<Regency> view;
  std::string dig;                  // 16 hex chars when present
  std::string peer;                 // destination (Send/Drop) or source (Recv)
  std::optional<uint64_t> size;     // encoded message size
  std::string via;                  // Decide: "quorum", "fwd" or "sync"
  std::optional<uint32_t> nops;     // Execute: batch size

  std::string format() const {
    std::ostringstream os;
    os << "t=" << t << " node=" << node << " ev=" << to_string(type);
    if (!kind.empty()) os << " kind=" << kind;
    if (inst) os << " inst=" << *inst;
    if (view) os << " view=" << *view;
    if (!dig.empty()) os << " dig=" << dig;
    if (!peer.empty()) os << " peer=" << peer;
    if (size) os << " size=" << *size;
    if (!via.empty()) os << " via=" << via;
    if (nops) os << " nops=" << *nops;
    return os.str();
  }
};

inline std::optional<TraceEvent> parse_trace_line(const std::string& line) {
  TraceEvent ev;
  bool have_t = false, have_node = false, have_ev = false;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) return std::nullopt;
    std::string key = tok.substr(0, eq);
    std::string val = tok.substr(eq + 1);
    if (key == "t") {
      ev.t = std::stoull(val);
      have_t = true;
    } else if (key == "node") {
      ev.node = val;
      have_node = true;
    } else if (key == "ev") {
      auto type = trace_ev_from(val);
      if (!type) return std::nullopt;
      ev.type = *type;
      have_ev = true;
    } else if (key == "kind") {
      ev.kind = val;
    } else if (key == "inst") {
      ev.inst = std::stoull(val);
    } else if (key == "view") {
      ev.view = std::stoull(val);
    } else if (key == "dig") {
      ev.dig = val;
    } else if (key == "peer") {
      ev.peer = val;
    } else if (key == "size") {
      ev.size = std::stoull(val);
    } else if (key == "via") {
      ev.via = val;
    } else if (key == "nops") {
      ev.nops = static_cast<uint32_t>(std::stoul(val));
    } else {
      return std::nullopt;
    }
  }
  if (!have_t || !have_node || !have_ev) return std::nullopt;
  return ev;
}

// Append-only in-memory trace; the harness writes it out as trace.log.
class TraceLog {
 public:
  void append(const TraceEvent& ev) { lines_.push_back(ev.format()); }
  const std::vector<std::string>& lines() const { return lines_; }

  std::string joined() const {
    std::string out;
    for (const auto& l : lines_) {
      out += l;
      out += '\n';
    }
    return out;
  }

  bool write_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) return false;
    out << joined();
    return static_cast<bool>(out);
  }

 private:
  std::vector<std::string> lines_;
};

}  // namespace bftsim
