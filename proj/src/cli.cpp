/*
 * Copyright 2026 lockstep-pool contributors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "lspool/cli.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "lspool/allocator.hpp"
#include "lspool/engine.hpp"
#include "lspool/scenario.hpp"

namespace lspool {

namespace {

int log_level() {
  const char* env = std::getenv("LOCKSTEP_POOL_LOG");
  if (!env) return 0;
  std::string v = env;
  if (v == "debug") return 2;
  if (v == "info") return 1;
  return 0;
}

char class_letter(Criticality c) {
  switch (c) {
    case Criticality::Essential: return 'E';
    case Criticality::High: return 'H';
    case Criticality::Medium: return 'M';
    case Criticality::Low: return 'L';
  }
  return '?';
}

void print_mapping(std::ostream& out, const std::vector<ThreadSpec>& threads,
                   const SystemMapping& mapping) {
  for (const auto& t : threads) {
    const Assignment* a = mapping.find(t.id);
    out << "  " << t.id << " (" << to_string(t.criticality) << "): ";
    if (!a || a->mode == Mode::Descheduled) {
      out << "Descheduled\n";
      continue;
    }
    out << to_string(a->mode) << " on tiles {";
    bool first = true;
    for (TileId tile : a->tiles) {
      if (!first) out << ",";
      out << tile;
      first = false;
    }
    out << "}";
    if (a->share_pct != 100) out << " @ " << a->share_pct << "% time share";
    out << "\n";
  }
}

int write_outputs(const RunResult& result, const std::string& trace_path,
                  const std::string& report_path, std::ostream& out, std::ostream& err) {
  if (!trace_path.empty()) {
    std::ofstream tf(trace_path);
    if (!tf) {
      err << "cannot write trace to '" << trace_path << "'\n";
      return 1;
    }
    result.trace.write_ndjson(tf);
  }
  if (!report_path.empty()) {
    std::ofstream rf(report_path);
    if (!rf) {
      err << "cannot write report to '" << report_path << "'\n";
      return 1;
    }
    rf << result.state.metrics.to_json() << "\n";
  }
  out << result.state.metrics.to_text();
  return 0;
}

std::string suffixed(const std::string& path, unsigned k) {
  return path.empty() ? path : path + "." + std::to_string(k);
}

int cmd_run(const std::string& scenario_path, std::optional<std::uint64_t> seed,
            const std::string& trace_path, const std::string& report_path, unsigned runs,
            std::ostream& out, std::ostream& err) {
  ScenarioConfig scenario;
  try {
    scenario = ScenarioConfig::load_file(scenario_path);
  } catch (const ScenarioError& e) {
    err << "scenario validation error: " << e.what() << "\n";
    return 2;
  }
  if (seed) scenario.rng_seed = *seed;

  if (runs <= 1) {
    RunResult result = Engine(scenario).run();
    int rc = write_outputs(result, trace_path, report_path, out, err);
    if (rc != 0) return rc;
    return result.essential_descheduled() ? 3 : 0;
  }

  // Replicated seeds fan out across workers; every run is an isolated
  // engine instance.
  std::vector<RunResult> results(runs);
  std::vector<std::thread> workers;
  std::uint64_t base = scenario.rng_seed.value_or(0);
  for (unsigned k = 0; k < runs; ++k) {
    workers.emplace_back([&scenario, &results, base, k]() {
      ScenarioConfig local = scenario;
      local.rng_seed = base + k;
      results[k] = Engine(local).run();
    });
  }
  for (auto& w : workers) w.join();

  int exit_code = 0;
  for (unsigned k = 0; k < runs; ++k) {
    out << "--- run " << k << " (seed " << base + k << ")\n";
    int rc = write_outputs(results[k], suffixed(trace_path, k), suffixed(report_path, k), out,
                           err);
    if (rc != 0) return rc;
    if (results[k].essential_descheduled()) exit_code = 3;
  }
  return exit_code;
}

int cmd_map(const std::string& scenario_path, const std::string& profile_name, bool oracle,
            std::ostream& out, std::ostream& err) {
  ScenarioConfig scenario;
  try {
    scenario = ScenarioConfig::load_file(scenario_path);
  } catch (const ScenarioError& e) {
    err << "scenario validation error: " << e.what() << "\n";
    return 2;
  }
  PerformanceProfile profile = scenario.profile;
  if (!profile_name.empty()) {
    const PerformanceProfile* p = find_builtin_profile(profile_name);
    if (!p) {
      err << "unknown profile '" << profile_name << "'\n";
      return 2;
    }
    profile = *p;
  }

  std::vector<Tile> tiles = scenario.build_tiles();
  MapResult r = map_threads(scenario.threads, tiles, profile);
  out << "profile " << profile.name << ":\n";
  if (!r.feasible) {
    out << "  infeasible; first unsatisfiable thread: " << r.first_unsatisfiable << "\n";
  } else {
    print_mapping(out, scenario.threads, r.mapping);
    std::vector<TileId> gated;
    for (const auto& t : tiles)
      if (!r.mapping.active_tiles.count(t.id)) gated.push_back(t.id);
    if (!gated.empty()) {
      out << "  gated tiles:";
      for (TileId t : gated) out << " " << t;
      out << "\n";
    }
    out << "  energy rate " << mapping_power_uw(scenario.threads, tiles, r.mapping) / 1.0e6
        << " W, objective " << mapping_objective(scenario.threads, r.mapping) << "\n";
  }

  if (oracle) {
    OracleResult o;
    try {
      o = brute_force_map(scenario.threads, tiles, profile);
    } catch (const OracleTooLarge& e) {
      err << "oracle refused: " << e.what() << "\n";
      return 4;
    }
    if (!o.feasible) {
      out << "oracle: infeasible\n";
      if (r.feasible) out << "  WARNING: heuristic found a mapping the oracle missed\n";
    } else {
      out << "oracle (objective " << o.objective << "):\n";
      print_mapping(out, scenario.threads, o.mapping);
      long long heuristic_obj = r.feasible ? mapping_objective(scenario.threads, r.mapping) : 0;
      double gap =
          o.objective == 0 ? 0.0
                           : 100.0 * static_cast<double>(o.objective - heuristic_obj) /
                                 static_cast<double>(o.objective);
      out << "objective gap: " << gap << "%\n";
    }
  }
  return r.feasible ? 0 : 3;
}

int cmd_profiles(std::ostream& out) {
  for (const auto& p : builtin_profiles()) {
    for (Criticality c : {Criticality::Essential, Criticality::High, Criticality::Medium,
                          Criticality::Low}) {
      out << p.name << ": " << class_letter(c) << " -> ";
      const auto& modes = p.allowed_for(c);
      for (size_t i = 0; i < modes.size(); ++i) {
        if (i) out << ",";
        out << to_string(modes[i]);
      }
      out << "\n";
    }
  }
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fault-tolerance simulator for a tiled MPSoC on-board computer"};
  app.require_subcommand(1);

  std::string scenario_path, trace_path, report_path, profile_name;
  std::uint64_t seed = 0;
  bool seed_set = false;
  unsigned runs = 1;
  bool oracle = false;

  CLI::App* run = app.add_subcommand("run", "simulate a scenario");
  run->add_option("scenario", scenario_path, "scenario JSON path")->required();
  run->add_option("--seed", seed, "override the scenario RNG seed")
      ->each([&](const std::string&) { seed_set = true; });
  run->add_option("--trace", trace_path, "write the NDJSON trace here");
  run->add_option("--report", report_path, "write the JSON report here");
  run->add_option("--runs", runs, "replicate with consecutive seeds")->check(CLI::Range(1u, 1u << 20));

  CLI::App* map = app.add_subcommand("map", "print the static mapping for a profile");
  map->add_option("scenario", scenario_path, "scenario JSON path")->required();
  map->add_option("--profile", profile_name, "built-in profile name");
  map->add_flag("--oracle", oracle, "also run the exhaustive oracle and print the gap");

  CLI::App* profiles = app.add_subcommand("profiles", "print the built-in performance profiles");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << e.what() << "\n";
    return 1;
  }

  if (log_level() >= 1) err << "lockstep-pool: " << app.get_subcommands().front()->get_name()
                            << " " << scenario_path << "\n";

  try {
    if (run->parsed())
      return cmd_run(scenario_path, seed_set ? std::optional(seed) : std::nullopt, trace_path,
                     report_path, runs, out, err);
    if (map->parsed()) return cmd_map(scenario_path, profile_name, oracle, out, err);
    if (profiles->parsed()) return cmd_profiles(out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace lspool
