// Copyright 2026 the bftsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bftsim/adversary.hpp"
#include "bftsim/client.hpp"
#include "bftsim/lincheck.hpp"
#include "bftsim/metrics.hpp"
#include "bftsim/replica.hpp"
#include "bftsim/scenario.hpp"
#include "bftsim/simnet.hpp"
#include "bftsim/trace.hpp"

namespace bftsim {

struct RunArtifacts {
  Scenario scenario;
  RunStatus status;
  std::vector<std::string> trace_lines;
  History history;
  TallyCounts live;      // counters maintained during the run
  RunMetrics metrics;    // live tally + history statistics
};

// Builds the node set described by the scenario, runs it to the horizon (or
// quiescence), and collects every artifact of the run.
inline RunArtifacts run_scenario(const Scenario& sc) {
  MacAuthenticator auth(splitmix64(sc.seed ^ 0x61757468ULL));

  NetConfig net = sc.net;
  net.seed = splitmix64(sc.seed ^ 0x6e6574ULL);
  SimNet sim(net);
  sim.set_replica_count(sc.params.n);

  std::vector<std::unique_ptr<Replica>> replicas;
  for (NodeId r = 0; r < sc.params.n; ++r) {
    replicas.push_back(std::make_unique<Replica>(r, sc.params, sc.replica, &auth));
    sim.add_node(r, replicas.back().get());
  }

  std::vector<std::unique_ptr<Client>> clients;
  for (size_t i = 0; i < sc.clients.size(); ++i) {
    const ClientSpec& spec = sc.clients[i];
    ClientConfig cfg;
    cfg.node = sc.params.n + static_cast<NodeId>(i);
    cfg.params = sc.params;
    cfg.ordered_threshold = quorum_size(sc.params);
    cfg.read_threshold = sc.read_mode == ReadQuorumMode::Optimized
                             ? quorum_size(sc.params)
                             : weak_certificate_size(sc.params);
    cfg.ops = materialize_ops(sc, i);
    cfg.start_time = spec.start_time;
    cfg.think_time = spec.think_time;
    cfg.retransmit_period = spec.retransmit_period;
    cfg.read_fallback = spec.read_fallback;
    clients.push_back(std::make_unique<Client>(std::move(cfg)));
    sim.add_node(sc.params.n + static_cast<NodeId>(i), clients.back().get());
  }

  std::unique_ptr<ScriptedAdversary> adversary;
  if (sc.has_attack) {
    AttackPolicy policy = sc.attack;
    policy.seed = splitmix64(sc.seed ^ 0x616476ULL);
    adversary = std::make_unique<ScriptedAdversary>(sc.params, policy);
    sim.set_filter(adversary.get());
  }
  for (const DownWindow& w : sc.downtime) sim.add_down_window(w);

  RunArtifacts out;
  out.scenario = sc;
  out.status = sim.run_until(sc.horizon);
  out.trace_lines = sim.trace_log().lines();
  for (const auto& c : clients)
    out.history.insert(out.history.end(), c->history().begin(), c->history().end());
  out.live = sim.live_tally();
  out.metrics = build_metrics(out.live, out.history);
  return out;
}

// ---- checks -------------------------------------------------------------------

struct CheckOutcome {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct CheckReport {
  std::vector<CheckOutcome> checks;
  bool all_pass = true;

  void add(std::string name, bool pass, std::string detail = "") {
    if (!pass) all_pass = false;
    checks.push_back({std::move(name), pass, std::move(detail)});
  }
};

inline std::vector<std::string> correct_replica_names(const Scenario& sc) {
  std::vector<std::string> names;
  for (NodeId r = 0; r < sc.params.n; ++r)
    if (!sc.has_attack || !sc.attack.controlled.count(r))
      names.push_back(node_name(r, sc.params.n));
  return names;
}

// Validates a run from its externally visible artifacts alone (trace lines +
// client history). `live` is passed when checking a freshly executed run, in
// which case the recounted tally must agree with the live counters exactly.
inline CheckReport check_run(const Scenario& sc, const std::vector<std::string>& trace_lines,
                             const History& history, const TallyCounts* live = nullptr) {
  CheckReport report;

  std::vector<TraceEvent> events;
  events.reserve(trace_lines.size());
  bool parse_ok = true;
  for (size_t i = 0; i < trace_lines.size(); ++i) {
    auto ev = parse_trace_line(trace_lines[i]);
    if (!ev) {
      report.add("trace_parse", false,
                 "line " + std::to_string(i + 1) + " unparseable: " + trace_lines[i]);
      parse_ok = false;
      break;
    }
    events.push_back(std::move(*ev));
  }
  if (parse_ok) report.add("trace_parse", true);

  TallyCounts tally;
  for (const auto& ev : events) tally.accumulate(ev);

  if (live) {
    bool match = parse_ok && tally == *live;
    report.add("tally_match", match,
               match ? "" : "recounted metrics differ from live run counters");
  }

  std::vector<std::string> correct = correct_replica_names(sc);
  auto is_correct = [&](const std::string& node) {
    for (const auto& name : correct)
      if (name == node) return true;
    return false;
  };

  for (const std::string& check : sc.checks) {
    if (check == "agreement") {
      // No two correct replicas decide differently on any instance.
      bool ok = true;
      std::string detail;
      for (const auto& [inst, per_node] : tally.decides) {
        std::string dig;
        for (const auto& [node, info] : per_node) {
          if (!is_correct(node)) continue;
          if (dig.empty()) {
            dig = info.dig;
          } else if (dig != info.dig) {
            ok = false;
            detail = "instance " + std::to_string(inst) + ": conflicting decisions " + dig +
                     " vs " + info.dig;
            break;
          }
        }
        if (!ok) break;
      }
      report.add("agreement", ok, detail);
    } else if (check == "integrity") {
      // Each replica decides an instance at most once and executes instances
      // in gapless order (state-transfer installs may jump the cursor).
      bool ok = true;
      std::string detail;
      for (const auto& [inst, per_node] : tally.decides) {
        for (const auto& [node, info] : per_node) {
          if (info.count > 1) {
            ok = false;
            detail = node + " decided instance " + std::to_string(inst) + " " +
                     std::to_string(info.count) + " times";
          }
        }
      }
      std::map<std::string, uint64_t> cursor;
      for (const auto& ev : events) {
        if (!ok) break;
        if (ev.type == TraceEv::Execute) {
          uint64_t expect = cursor[ev.node] + 1;
          if (ev.inst.value_or(0) != expect) {
            ok = false;
            detail = ev.node + " executed instance " + std::to_string(ev.inst.value_or(0)) +
                     " but expected " + std::to_string(expect);
            break;
          }
          cursor[ev.node] = expect;
        } else if (ev.type == TraceEv::StInstall) {
          uint64_t up_to = ev.inst.value_or(0);
          if (up_to > cursor[ev.node]) cursor[ev.node] = up_to;
        }
      }
      report.add("integrity", ok, detail);
    } else if (check == "liveness") {
      uint64_t incomplete = 0;
      for (const auto& rec : history)
        if (!rec.completed) ++incomplete;
      report.add("liveness", incomplete == 0,
                 incomplete ? std::to_string(incomplete) + " operations never completed" : "");
    } else if (check == "linearizability") {
      LinearizabilityReport lr = check_linearizability(history);
      report.add("linearizability", lr.ok(), lr.witness);
    } else if (check == "expect_violation") {
      LinearizabilityReport lr = check_linearizability(history);
      bool violated = lr.verdict == LinVerdict::Violation;
      report.add("expect_violation", violated,
                 violated ? lr.witness : "expected a linearizability violation, found none");
    } else if (check == "expect_incomplete") {
      uint64_t incomplete = 0;
      for (const auto& rec : history)
        if (!rec.completed) ++incomplete;
      report.add("expect_incomplete", incomplete > 0,
                 incomplete ? "" : "expected blocked operations, all completed");
    } else if (check == "no_regency_change") {
      uint64_t changes = 0;
      for (const auto& [node, cnt] : tally.regency_changes)
        if (is_correct(node)) changes += cnt;
      report.add("no_regency_change", changes == 0,
                 changes ? std::to_string(changes) + " regency changes observed" : "");
    }
  }
  return report;
}

inline std::string format_report(const CheckReport& report) {
  std::ostringstream os;
  for (const auto& c : report.checks) {
    os << (c.pass ? "  PASS " : "  FAIL ") << c.name;
    if (!c.detail.empty()) os << ": " << c.detail;
    os << "\n";
  }
  return os.str();
}

// ---- mode comparison ------------------------------------------------------------

struct CompareRow {
  std::string label;
  RunMetrics metrics;
  CheckReport report;
};

inline std::vector<CompareRow> compare_modes(const Scenario& base, const std::vector<Mode>& modes) {
  std::vector<CompareRow> rows;
  for (Mode m : modes) {
    Scenario sc = base;
    sc.mode = m;
    sc.replica.mode = m;
    RunArtifacts art = run_scenario(sc);
    CompareRow row;
    row.label = to_string(m);
    row.metrics = art.metrics;
    row.report = check_run(sc, art.trace_lines, art.history, &art.live);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string compare_table(const std::vector<CompareRow>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(11) << "mode" << std::right << std::setw(10) << "ops_done"
     << std::setw(10) << "ops_stuck" << std::setw(12) << "rd_mean" << std::setw(12) << "up_mean"
     << std::setw(10) << "fwd_sent" << std::setw(10) << "req_sent" << std::setw(9) << "regency"
     << std::setw(8) << "checks" << "\n";
  for (const auto& row : rows) {
    uint64_t regency = 0;
    for (const auto& [node, r] : row.metrics.tally.max_regency)
      if (r > regency) regency = r;
    os << std::left << std::setw(11) << row.label << std::right << std::setw(10)
       << row.metrics.completed_ops() << std::setw(10) << row.metrics.incomplete_ops()
       << std::setw(12) << std::fixed << std::setprecision(1) << row.metrics.reads.mean()
       << std::setw(12) << row.metrics.updates.mean() << std::setw(10)
       << row.metrics.tally.sends("FWD-DECISION") << std::setw(10)
       << row.metrics.tally.sends("REQ-DECISION") << std::setw(9) << regency << std::setw(8)
       << (row.report.all_pass ? "pass" : "FAIL") << "\n";
  }
  return os.str();
}

// ---- artifact files ---------------------------------------------------------------

inline nlohmann::json history_record_to_json(const HistoryRecord& rec) {
  nlohmann::json j;
  j["client"] = rec.client;
  j["seq"] = rec.seq;
  j["kind"] = rec.kind == OpKind::Read ? "read" : "update";
  j["key"] = rec.key;
  j["value"] = rec.value;
  j["invoke"] = rec.invoke;
  j["completed"] = rec.completed;
  j["response"] = rec.response;
  j["result"] = rec.result;
  j["matching"] = rec.matching;
  j["fast_path"] = rec.fast_path;
  return j;
}

inline Result<HistoryRecord, std::string> history_record_from_json(const nlohmann::json& j) {
  try {
    HistoryRecord rec;
    rec.client = j.at("client").get<uint64_t>();
    rec.seq = j.at("seq").get<uint64_t>();
    rec.kind = j.at("kind").get<std::string>() == "read" ? OpKind::Read : OpKind::Update;
    rec.key = j.at("key").get<std::string>();
    rec.value = j.at("value").get<std::string>();
    rec.invoke = j.at("invoke").get<SimTime>();
    rec.completed = j.at("completed").get<bool>();
    rec.response = j.at("response").get<SimTime>();
    rec.result = j.at("result").get<std::string>();
    rec.matching = j.at("matching").get<uint32_t>();
    rec.fast_path = j.at("fast_path").get<bool>();
    return rec;
  } catch (const nlohmann::json::exception& e) {
    return std::string("bad history record: ") + e.what();
  }
}

// Writes trace.log, history.jsonl, metrics.csv and the resolved scenario.json
// into `dir`. Returns an error message on I/O failure.
inline std::optional<std::string> write_artifacts(const RunArtifacts& art, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) return "cannot create " + dir + ": " + ec.message();

  {
    std::ofstream out(dir + "/trace.log", std::ios::binary);
    for (const auto& line : art.trace_lines) out << line << '\n';
    if (!out) return "cannot write " + dir + "/trace.log";
  }
  {
    std::ofstream out(dir + "/history.jsonl", std::ios::binary);
    for (const auto& rec : art.history) out << history_record_to_json(rec).dump() << '\n';
    if (!out) return "cannot write " + dir + "/history.jsonl";
  }
  {
    std::ofstream out(dir + "/metrics.csv", std::ios::binary);
    out << metrics_csv(art.metrics);
    if (!out) return "cannot write " + dir + "/metrics.csv";
  }
  {
    std::ofstream out(dir + "/scenario.json", std::ios::binary);
    out << scenario_to_json(art.scenario).dump(2) << '\n';
    if (!out) return "cannot write " + dir + "/scenario.json";
  }
  return std::nullopt;
}

inline Result<std::vector<std::string>, std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "cannot open " + path;
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace bftsim
