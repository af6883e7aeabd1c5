// Copyright 2026 the bftsim authors. Licensed under the Apache License,
// Version 2.0. See the LICENSE file at the root of this distribution or at
// http://www.apache.org/licenses/LICENSE-2.0

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bftsim/bftsim.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitConfigError = 2;

std::optional<bftsim::Mode> mode_from_string(const std::string& s) {
  if (s == "baseline") return bftsim::Mode::Baseline;
  if (s == "broadcast") return bftsim::Mode::Broadcast;
  if (s == "forward") return bftsim::Mode::Forward;
  return std::nullopt;
}

// Loads and validates a scenario file; prints the failure and returns nullopt
// on any parse or validation error.
std::optional<bftsim::Scenario> load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot open scenario file " << path << "\n";
    return std::nullopt;
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    std::cerr << "error: " << path << " is not valid JSON: " << e.what() << "\n";
    return std::nullopt;
  }
  auto sc = bftsim::scenario_from_json(j);
  if (!sc.ok()) {
    std::cerr << "error: " << path << ": " << sc.error() << "\n";
    return std::nullopt;
  }
  return sc.value();
}

void print_run_summary(const bftsim::RunArtifacts& art) {
  const auto& m = art.metrics;
  std::cout << "scenario=" << art.scenario.name << " mode=" << to_string(art.scenario.mode)
            << " reads=" << to_string(art.scenario.read_mode) << " seed=" << art.scenario.seed
            << "\n";
  std::cout << "  sim_end=" << art.status.end << (art.status.quiesced ? " (quiesced)" : "")
            << " events=" << art.status.events << " ops_done=" << m.completed_ops()
            << " ops_stuck=" << m.incomplete_ops() << "\n";
}

int cmd_run(const std::string& path, bool has_seed, uint64_t seed, bool has_horizon,
            uint64_t horizon, const std::string& mode_str, const std::string& out_dir) {
  auto sc = load_scenario(path);
  if (!sc) return kExitConfigError;
  if (has_seed) sc->seed = seed;
  if (has_horizon) sc->horizon = horizon;
  if (!mode_str.empty()) {
    auto m = mode_from_string(mode_str);
    if (!m) {
      std::cerr << "error: --mode expects baseline, broadcast, or forward\n";
      return kExitConfigError;
    }
    sc->mode = *m;
    sc->replica.mode = *m;
  }

  bftsim::RunArtifacts art = bftsim::run_scenario(*sc);
  print_run_summary(art);

  if (!out_dir.empty()) {
    if (auto err = bftsim::write_artifacts(art, out_dir)) {
      std::cerr << "error: " << *err << "\n";
      return kExitConfigError;
    }
    std::cout << "  artifacts written to " << out_dir << "\n";
  }

  bftsim::CheckReport report = bftsim::check_run(*sc, art.trace_lines, art.history, &art.live);
  std::cout << bftsim::format_report(report);
  std::cout << (report.all_pass ? "PASS" : "FAIL") << "\n";
  return report.all_pass ? kExitPass : kExitCheckFailed;
}

int cmd_compare(const std::string& path, bool has_seed, uint64_t seed, bool has_horizon,
                uint64_t horizon, const std::string& modes_csv) {
  auto sc = load_scenario(path);
  if (!sc) return kExitConfigError;
  if (has_seed) sc->seed = seed;
  if (has_horizon) sc->horizon = horizon;

  std::vector<bftsim::Mode> modes;
  std::stringstream ss(modes_csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    auto m = mode_from_string(tok);
    if (!m) {
      std::cerr << "error: --modes contains unknown mode \"" << tok << "\"\n";
      return kExitConfigError;
    }
    modes.push_back(*m);
  }
  if (modes.empty()) {
    std::cerr << "error: --modes must list at least one mode\n";
    return kExitConfigError;
  }

  std::cout << "scenario=" << sc->name << " seed=" << sc->seed << "\n";
  auto rows = bftsim::compare_modes(*sc, modes);
  std::cout << bftsim::compare_table(rows);
  bool all_pass = true;
  for (const auto& row : rows) {
    if (!row.report.all_pass) {
      all_pass = false;
      std::cout << "mode " << row.label << ":\n" << bftsim::format_report(row.report);
    }
  }
  std::cout << (all_pass ? "PASS" : "FAIL") << "\n";
  return all_pass ? kExitPass : kExitCheckFailed;
}

int cmd_check(const std::string& dir) {
  auto sc = load_scenario(dir + "/scenario.json");
  if (!sc) return kExitConfigError;

  auto trace = bftsim::read_lines(dir + "/trace.log");
  if (!trace.ok()) {
    std::cerr << "error: " << trace.error() << "\n";
    return kExitConfigError;
  }
  auto hist_lines = bftsim::read_lines(dir + "/history.jsonl");
  if (!hist_lines.ok()) {
    std::cerr << "error: " << hist_lines.error() << "\n";
    return kExitConfigError;
  }
  bftsim::History history;
  for (size_t i = 0; i < hist_lines.value().size(); ++i) {
    const std::string& line = hist_lines.value()[i];
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      std::cerr << "error: history.jsonl line " << i + 1 << ": " << e.what() << "\n";
      return kExitConfigError;
    }
    auto rec = bftsim::history_record_from_json(j);
    if (!rec.ok()) {
      std::cerr << "error: history.jsonl line " << i + 1 << ": " << rec.error() << "\n";
      return kExitConfigError;
    }
    history.push_back(rec.value());
  }

  std::cout << "scenario=" << sc->name << " trace_lines=" << trace.value().size()
            << " history_ops=" << history.size() << "\n";
  bftsim::CheckReport report = bftsim::check_run(*sc, trace.value(), history);
  std::cout << bftsim::format_report(report);
  std::cout << (report.all_pass ? "PASS" : "FAIL") << "\n";
  return report.all_pass ? kExitPass : kExitCheckFailed;
}

int cmd_list_scenarios(const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    std::cerr << "error: " << dir << " is not a directory\n";
    return kExitConfigError;
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    auto sc = load_scenario(file.string());
    if (!sc) return kExitConfigError;
    std::cout << file.filename().string() << "\n    " << sc->name << " [" << to_string(sc->mode)
              << ", " << to_string(sc->read_mode) << " reads]";
    if (!sc->description.empty()) std::cout << ": " << sc->description;
    std::cout << "\n";
  }
  if (files.empty()) std::cout << "no scenario files in " << dir << "\n";
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic BFT replication simulator"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir, mode_str;
  uint64_t seed = 0, horizon = 0;
  std::string modes_csv = "baseline,broadcast,forward";
  std::string artifacts_dir;
  std::string scenarios_dir = std::string(BFTSIM_SOURCE_DIR) + "/scenarios";

  CLI::App* run = app.add_subcommand("run", "Execute a scenario and validate the run");
  run->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--horizon", horizon, "Override the simulated-time horizon");
  run->add_option("--mode", mode_str, "Override the replication mode (baseline|broadcast|forward)");
  run->add_option("--out", out_dir, "Directory for trace.log, history.jsonl, metrics.csv");

  CLI::App* compare = app.add_subcommand("compare", "Run a scenario under several modes");
  compare->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  compare->add_option("--seed", seed, "Override the scenario seed");
  compare->add_option("--horizon", horizon, "Override the simulated-time horizon");
  compare->add_option("--modes", modes_csv, "Comma-separated modes to compare");

  CLI::App* check = app.add_subcommand("check", "Re-validate artifacts written by run --out");
  check->add_option("dir", artifacts_dir, "Artifacts directory")->required();

  CLI::App* list = app.add_subcommand("list-scenarios", "List shipped scenario files");
  list->add_option("dir", scenarios_dir, "Scenario directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitPass : kExitConfigError;
  }

  try {
    if (run->parsed())
      return cmd_run(scenario_path, run->count("--seed") > 0, seed, run->count("--horizon") > 0,
                     horizon, mode_str, out_dir);
    if (compare->parsed())
      return cmd_compare(scenario_path, compare->count("--seed") > 0, seed,
                         compare->count("--horizon") > 0, horizon, modes_csv);
    if (check->parsed()) return cmd_check(artifacts_dir);
    if (list->parsed()) return cmd_list_scenarios(scenarios_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
  return kExitConfigError;
}
