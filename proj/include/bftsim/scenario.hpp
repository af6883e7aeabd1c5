// Copyright 2026 the bftsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "bftsim/adversary.hpp"
#include "bftsim/client.hpp"
#include "bftsim/quorum.hpp"
#include "bftsim/replica.hpp"
#include "bftsim/simnet.hpp"
#include "bftsim/types.hpp"

namespace bftsim {

// Synthetic workload description, expanded deterministically from the
// scenario seed when a client does not list explicit operations.
struct GeneratedWorkload {
  uint32_t ops = 10;
  uint32_t read_permille = 0;
  std::vector<std::string> keys = {"k"};
  uint32_t value_len = 4;
  bool fast_reads = true;
};

struct ClientSpec {
  SimTime start_time = 0;
  SimTime think_time = 1;
  SimTime retransmit_period = 4000;
  SimTime read_fallback = 1500;
  std::vector<ClientOp> ops;
  std::optional<GeneratedWorkload> generate;
};

// A complete, reproducible experiment description. Everything a run does —
// topology, timing, workload, fault pattern, and which checks the run must
// satisfy — lives here; together with the seed it pins the run bit for bit.
struct Scenario {
  std::string name = "unnamed";
  std::string description;
  SystemParams params{4, 1};
  Mode mode = Mode::Baseline;
  ReadQuorumMode read_mode = ReadQuorumMode::Optimized;
  uint64_t seed = 1;
  SimTime horizon = 100000;
  NetConfig net;
  ReplicaConfig replica;
  std::vector<ClientSpec> clients;
  bool has_attack = false;
  AttackPolicy attack;
  std::vector<DownWindow> downtime;
  std::vector<std::string> checks = {"agreement", "integrity", "linearizability", "liveness"};
};

inline const std::set<std::string>& known_checks() {
  static const std::set<std::string> kChecks = {
      "agreement", "integrity", "linearizability", "liveness",
      "no_regency_change", "expect_violation", "expect_incomplete"};
  return kChecks;
}

// ---- JSON (de)serialization --------------------------------------------------

namespace scenario_detail {

template <typename T>
bool read_field(const nlohmann::json& j, const char* key, T& out, std::string& err,
                const std::string& path) {
  if (!j.contains(key)) return true;
  try {
    out = j.at(key).get<T>();
    return true;
  } catch (const nlohmann::json::exception& e) {
    err = path + "." + key + ": " + e.what();
    return false;
  }
}

}  // namespace scenario_detail

constexpr uint32_t kScenarioSchemaVersion = 1;

inline Result<Scenario, std::string> scenario_from_json(const nlohmann::json& j) {
  using scenario_detail::read_field;
  Scenario sc;
  std::string err;

  uint32_t version = kScenarioSchemaVersion;
  if (!read_field(j, "schema_version", version, err, "scenario")) return err;
  if (version != kScenarioSchemaVersion)
    return "scenario.schema_version: unsupported version " + std::to_string(version);

  if (!read_field(j, "name", sc.name, err, "scenario")) return err;
  if (!read_field(j, "description", sc.description, err, "scenario")) return err;
  if (!read_field(j, "seed", sc.seed, err, "scenario")) return err;
  if (!read_field(j, "horizon", sc.horizon, err, "scenario")) return err;
  if (sc.horizon == 0) return std::string("scenario.horizon: must be positive");

  uint32_t n = 4, f = 1;
  if (j.contains("params")) {
    if (!read_field(j.at("params"), "n", n, err, "params")) return err;
    if (!read_field(j.at("params"), "f", f, err, "params")) return err;
  }
  try {
    sc.params = SystemParams::checked(n, f);
  } catch (const std::invalid_argument& e) {
    return std::string("params: ") + e.what();
  }

  std::string mode = "baseline", read_mode = "optimized";
  if (!read_field(j, "mode", mode, err, "scenario")) return err;
  if (!read_field(j, "read_quorum_mode", read_mode, err, "scenario")) return err;
  if (mode == "baseline")
    sc.mode = Mode::Baseline;
  else if (mode == "broadcast")
    sc.mode = Mode::Broadcast;
  else if (mode == "forward")
    sc.mode = Mode::Forward;
  else
    return "scenario.mode: unknown mode \"" + mode + "\"";
  if (read_mode == "optimized")
    sc.read_mode = ReadQuorumMode::Optimized;
  else if (read_mode == "naive")
    sc.read_mode = ReadQuorumMode::Naive;
  else
    return "scenario.read_quorum_mode: unknown mode \"" + read_mode + "\"";

  if (j.contains("net")) {
    const auto& jn = j.at("net");
    if (!read_field(jn, "gst", sc.net.gst, err, "net")) return err;
    if (!read_field(jn, "base_delay", sc.net.base_delay, err, "net")) return err;
    if (!read_field(jn, "jitter", sc.net.jitter, err, "net")) return err;
    if (!read_field(jn, "pre_delay_min", sc.net.pre_delay_min, err, "net")) return err;
    if (!read_field(jn, "pre_delay_max", sc.net.pre_delay_max, err, "net")) return err;
    if (!read_field(jn, "pre_drop_permille", sc.net.pre_drop_permille, err, "net")) return err;
    if (!read_field(jn, "delay_matrix", sc.net.delay_matrix, err, "net")) return err;
    if (sc.net.base_delay == 0) return std::string("net.base_delay: must be positive");
    if (sc.net.pre_delay_min == 0) return std::string("net.pre_delay_min: must be positive");
    if (sc.net.pre_delay_max < sc.net.pre_delay_min)
      return std::string("net.pre_delay_max: must be >= pre_delay_min");
    if (sc.net.pre_drop_permille > 1000)
      return std::string("net.pre_drop_permille: must be <= 1000");
  }

  if (j.contains("replica")) {
    const auto& jr = j.at("replica");
    if (!read_field(jr, "checkpoint_period", sc.replica.checkpoint_period, err, "replica"))
      return err;
    if (!read_field(jr, "propose_timeout", sc.replica.propose_timeout, err, "replica")) return err;
    if (!read_field(jr, "batch_limit", sc.replica.batch_limit, err, "replica")) return err;
    if (!read_field(jr, "reply_store_in_checkpoint", sc.replica.reply_store_in_checkpoint, err,
                    "replica"))
      return err;
    if (sc.replica.propose_timeout == 0)
      return std::string("replica.propose_timeout: must be positive");
    if (sc.replica.batch_limit == 0) return std::string("replica.batch_limit: must be positive");
  }
  sc.replica.mode = sc.mode;

  if (j.contains("clients")) {
    if (!j.at("clients").is_array()) return std::string("clients: must be an array");
    size_t ci = 0;
    for (const auto& jc : j.at("clients")) {
      std::string path = "clients[" + std::to_string(ci) + "]";
      ClientSpec spec;
      if (!read_field(jc, "start_time", spec.start_time, err, path)) return err;
      if (!read_field(jc, "think_time", spec.think_time, err, path)) return err;
      if (!read_field(jc, "retransmit_period", spec.retransmit_period, err, path)) return err;
      if (!read_field(jc, "read_fallback", spec.read_fallback, err, path)) return err;
      if (spec.retransmit_period == 0) return path + ".retransmit_period: must be positive";
      if (spec.read_fallback == 0) return path + ".read_fallback: must be positive";
      if (jc.contains("ops")) {
        size_t oi = 0;
        for (const auto& jo : jc.at("ops")) {
          std::string opath = path + ".ops[" + std::to_string(oi) + "]";
          ClientOp op;
          std::string kind;
          if (!read_field(jo, "op", kind, err, opath)) return err;
          if (kind == "update")
            op.kind = OpKind::Update;
          else if (kind == "read")
            op.kind = OpKind::Read;
          else
            return opath + ".op: expected \"update\" or \"read\"";
          if (!read_field(jo, "key", op.key, err, opath)) return err;
          if (!read_field(jo, "value", op.value, err, opath)) return err;
          if (!read_field(jo, "fast", op.fast, err, opath)) return err;
          if (op.key.empty()) return opath + ".key: must not be empty";
          spec.ops.push_back(std::move(op));
          ++oi;
        }
      }
      if (jc.contains("generate")) {
        const auto& jg = jc.at("generate");
        GeneratedWorkload gen;
        if (!read_field(jg, "ops", gen.ops, err, path + ".generate")) return err;
        if (!read_field(jg, "read_permille", gen.read_permille, err, path + ".generate"))
          return err;
        if (!read_field(jg, "keys", gen.keys, err, path + ".generate")) return err;
        if (!read_field(jg, "value_len", gen.value_len, err, path + ".generate")) return err;
        if (!read_field(jg, "fast_reads", gen.fast_reads, err, path + ".generate")) return err;
        if (gen.keys.empty()) return path + ".generate.keys: must not be empty";
        if (gen.read_permille > 1000) return path + ".generate.read_permille: must be <= 1000";
        spec.generate = std::move(gen);
      }
      if (spec.ops.empty() && !spec.generate)
        return path + ": needs either explicit \"ops\" or \"generate\"";
      if (!spec.ops.empty() && spec.generate)
        return path + ": \"ops\" and \"generate\" are mutually exclusive";
      sc.clients.push_back(std::move(spec));
      ++ci;
    }
  }
  if (sc.clients.empty()) return std::string("clients: at least one client is required");

  if (j.contains("attack")) {
    const auto& ja = j.at("attack");
    std::string variant = "omit_propose";
    if (!read_field(ja, "variant", variant, err, "attack")) return err;
    if (variant == "none") {
      sc.has_attack = false;
    } else {
      sc.has_attack = true;
      if (variant == "omit_propose")
        sc.attack.variant = AttackVariant::OmitPropose;
      else if (variant == "conflicting_propose")
        sc.attack.variant = AttackVariant::ConflictingPropose;
      else if (variant == "silent")
        sc.attack.variant = AttackVariant::Silent;
      else
        return "attack.variant: unknown variant \"" + variant + "\"";
      std::vector<uint32_t> controlled, isolated, censored;
      if (!read_field(ja, "controlled", controlled, err, "attack")) return err;
      if (!read_field(ja, "isolated", isolated, err, "attack")) return err;
      if (!read_field(ja, "censored_clients", censored, err, "attack")) return err;
      if (!read_field(ja, "drop_permille", sc.attack.drop_permille, err, "attack")) return err;
      if (!read_field(ja, "lie_on_reads", sc.attack.lie_on_reads, err, "attack")) return err;
      if (sc.attack.drop_permille > 1000)
        return std::string("attack.drop_permille: must be <= 1000");
      for (uint32_t id : controlled) sc.attack.controlled.insert(id);
      for (uint32_t idx : isolated) sc.attack.isolated.insert(idx);
      for (uint32_t idx : censored) {
        if (idx >= sc.clients.size())
          return std::string("attack.censored_clients: client index out of range");
        sc.attack.censored_clients.insert(sc.params.n + idx);
      }
      if (auto bad = validate_policy(sc.params, sc.attack)) return "attack: " + *bad;
    }
  }

  if (j.contains("downtime")) {
    size_t di = 0;
    for (const auto& jd : j.at("downtime")) {
      std::string path = "downtime[" + std::to_string(di) + "]";
      DownWindow w;
      if (!read_field(jd, "replica", w.node, err, path)) return err;
      if (!read_field(jd, "from", w.from, err, path)) return err;
      if (!read_field(jd, "until", w.until, err, path)) return err;
      if (!is_replica(w.node, sc.params.n)) return path + ".replica: not a replica id";
      if (w.until <= w.from) return path + ": until must be > from";
      sc.downtime.push_back(w);
      ++di;
    }
  }

  if (j.contains("checks")) {
    sc.checks.clear();
    for (const auto& jc : j.at("checks")) {
      std::string name = jc.get<std::string>();
      if (!known_checks().count(name)) return "checks: unknown check \"" + name + "\"";
      sc.checks.push_back(name);
    }
  }

  size_t total_nodes = sc.params.n + sc.clients.size();
  if (!sc.net.delay_matrix.empty()) {
    if (sc.net.delay_matrix.size() != total_nodes)
      return std::string("net.delay_matrix: needs one row per node (replicas then clients)");
    for (const auto& row : sc.net.delay_matrix)
      if (row.size() != total_nodes)
        return std::string("net.delay_matrix: rows must have one entry per node");
  }

  return sc;
}

inline nlohmann::json scenario_to_json(const Scenario& sc) {
  nlohmann::json j;
  j["schema_version"] = kScenarioSchemaVersion;
  j["name"] = sc.name;
  j["description"] = sc.description;
  j["params"] = {{"n", sc.params.n}, {"f", sc.params.f}};
  j["mode"] = to_string(sc.mode);
  j["read_quorum_mode"] = to_string(sc.read_mode);
  j["seed"] = sc.seed;
  j["horizon"] = sc.horizon;
  j["net"] = {{"gst", sc.net.gst},
              {"base_delay", sc.net.base_delay},
              {"jitter", sc.net.jitter},
              {"pre_delay_min", sc.net.pre_delay_min},
              {"pre_delay_max", sc.net.pre_delay_max},
              {"pre_drop_permille", sc.net.pre_drop_permille}};
  if (!sc.net.delay_matrix.empty()) j["net"]["delay_matrix"] = sc.net.delay_matrix;
  j["replica"] = {{"checkpoint_period", sc.replica.checkpoint_period},
                  {"propose_timeout", sc.replica.propose_timeout},
                  {"batch_limit", sc.replica.batch_limit},
                  {"reply_store_in_checkpoint", sc.replica.reply_store_in_checkpoint}};
  j["clients"] = nlohmann::json::array();
  for (const auto& spec : sc.clients) {
    nlohmann::json jc;
    jc["start_time"] = spec.start_time;
    jc["think_time"] = spec.think_time;
    jc["retransmit_period"] = spec.retransmit_period;
    jc["read_fallback"] = spec.read_fallback;
    if (spec.generate) {
      jc["generate"] = {{"ops", spec.generate->ops},
                        {"read_permille", spec.generate->read_permille},
                        {"keys", spec.generate->keys},
                        {"value_len", spec.generate->value_len},
                        {"fast_reads", spec.generate->fast_reads}};
    } else {
      jc["ops"] = nlohmann::json::array();
      for (const auto& op : spec.ops) {
        nlohmann::json jo;
        jo["op"] = op.kind == OpKind::Read ? "read" : "update";
        jo["key"] = op.key;
        if (op.kind == OpKind::Update) jo["value"] = op.value;
        if (op.kind == OpKind::Read) jo["fast"] = op.fast;
        jc["ops"].push_back(jo);
      }
    }
    j["clients"].push_back(jc);
  }
  if (sc.has_attack) {
    nlohmann::json ja;
    ja["variant"] = to_string(sc.attack.variant);
    ja["controlled"] = sc.attack.controlled;
    ja["isolated"] = sc.attack.isolated;
    nlohmann::json censored = nlohmann::json::array();
    for (NodeId id : sc.attack.censored_clients) censored.push_back(id - sc.params.n);
    ja["censored_clients"] = censored;
    ja["drop_permille"] = sc.attack.drop_permille;
    ja["lie_on_reads"] = sc.attack.lie_on_reads;
    j["attack"] = ja;
  }
  if (!sc.downtime.empty()) {
    j["downtime"] = nlohmann::json::array();
    for (const auto& w : sc.downtime)
      j["downtime"].push_back({{"replica", w.node}, {"from", w.from}, {"until", w.until}});
  }
  j["checks"] = sc.checks;
  return j;
}

// Expands generated workloads into concrete operation lists, deterministically
// from the scenario seed and client index.
inline std::vector<ClientOp> materialize_ops(const Scenario& sc, size_t client_index) {
  const ClientSpec& spec = sc.clients[client_index];
  if (!spec.generate) return spec.ops;
  const GeneratedWorkload& gen = *spec.generate;
  std::mt19937_64 rng(splitmix64(sc.seed ^ (0x776f726bULL + 0x9e37ULL * client_index)));
  std::vector<ClientOp> ops;
  ops.reserve(gen.ops);
  for (uint32_t i = 0; i < gen.ops; ++i) {
    ClientOp op;
    bool is_read = draw(rng, 0, 999) < gen.read_permille;
    op.kind = is_read ? OpKind::Read : OpKind::Update;
    op.key = gen.keys[draw(rng, 0, gen.keys.size() - 1)];
    op.fast = gen.fast_reads;
    if (!is_read) {
      op.value.reserve(gen.value_len);
      for (uint32_t k = 0; k < gen.value_len; ++k)
        op.value.push_back(static_cast<char>('a' + draw(rng, 0, 25)));
    }
    ops.push_back(std::move(op));
  }
  return ops;
}

}  // namespace bftsim
