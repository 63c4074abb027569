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

// Acceptance suite: one pass/fail line per criterion. Exits nonzero if any
// criterion fails. argv[1] = repository root (for scenarios/ and golden/).

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <vector>

#include "lspool/allocator.hpp"
#include "lspool/engine.hpp"
#include "lspool/metrics.hpp"
#include "lspool/scenario.hpp"

using namespace lspool;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& what, const std::string& detail = "") {
  std::printf("%s criterion %d: %s%s%s\n", pass ? "PASS" : "FAIL", criterion, what.c_str(),
              detail.empty() ? "" : " -- ", detail.c_str());
  if (!pass) ++g_failures;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Mode final_mode(const RunResult& r, const ThreadId& id) {
  return r.state.mapping.assignments.at(id).mode;
}

// ---------------------------------------------------------------------------
// Criterion 1: Fig. 3 golden scenarios
// ---------------------------------------------------------------------------

void criterion_fig3(const std::string& root) {
  auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool pass = true;

  // (a) prune: E,H stay TMR, M,L drop to DMR
  {
    ScenarioConfig c = ScenarioConfig::load_file(root + "/scenarios/fig3a.json");
    RunResult r = Engine(c).run();
    bool ok = final_mode(r, "E") == Mode::TMR && final_mode(r, "H") == Mode::TMR &&
              final_mode(r, "M") == Mode::DMR && final_mode(r, "L") == Mode::DMR &&
              !r.essential_descheduled();
    bool strategy_ok = false;
    for (const auto& ev : r.trace.events())
      if (ev.type == "StrategyApplied" && ev.str.at("kind") == "PruneLowCriticality")
        strategy_ok = true;
    if (!(ok && strategy_ok)) {
      pass = false;
      detail += "(a) post-fault modes wrong; ";
    }
  }

  // (b) frequency increase on two tiles, E,H TMR, nothing descheduled
  {
    ScenarioConfig c = ScenarioConfig::load_file(root + "/scenarios/fig3b.json");
    RunResult r = Engine(c).run();
    std::set<TileId> raised;
    int descheduled = 0;
    for (const auto& ev : r.trace.events()) {
      if (ev.type == "FrequencyChanged") raised.insert(ev.tile);
      if (ev.type == "ThreadDescheduled") ++descheduled;
    }
    bool ok = final_mode(r, "E") == Mode::TMR && final_mode(r, "H") == Mode::TMR &&
              raised.size() == 2 && descheduled == 0;
    if (!ok) {
      pass = false;
      detail += "(b) expected two raised tiles and preserved TMR; ";
    }
  }

  // (c) time shares reduced on three tiles, one tile gated
  {
    ScenarioConfig c = ScenarioConfig::load_file(root + "/scenarios/fig3c.json");
    RunResult r = Engine(c).run();
    std::set<ThreadId> cut;
    std::set<TileId> gated;
    SimTime strategy_at = -1;
    for (const auto& ev : r.trace.events()) {
      if (ev.type == "StrategyApplied") strategy_at = ev.t;
      if (ev.type == "TimeShareChanged") cut.insert(ev.thread);
      if (ev.type == "TileGated" && ev.t == strategy_at) gated.insert(ev.tile);
    }
    std::set<TileId> share_reduced_tiles;
    for (const ThreadId& id : cut) {
      const Assignment& a = r.state.mapping.assignments.at(id);
      if (a.share_pct < 100) share_reduced_tiles.insert(a.tiles.begin(), a.tiles.end());
    }
    bool ok = share_reduced_tiles.size() >= 3 && gated.size() >= 1 &&
              final_mode(r, "E") == Mode::TMR && !r.essential_descheduled();
    if (!ok) {
      pass = false;
      detail += "(c) expected share cuts across three tiles and a gated tile; ";
    }
  }

  // determinism + committed golden traces
  for (const char* name : {"fig3a", "fig3b", "fig3c"}) {
    ScenarioConfig c = ScenarioConfig::load_file(root + "/scenarios/" + name + ".json");
    RunResult r1 = Engine(c).run();
    RunResult r2 = Engine(c).run();
    std::ostringstream t1, t2;
    r1.trace.write_ndjson(t1);
    r2.trace.write_ndjson(t2);
    if (t1.str() != t2.str()) {
      pass = false;
      detail += std::string(name) + " not deterministic; ";
    }
    std::string golden = slurp(root + "/golden/" + name + ".trace.ndjson");
    if (golden.empty() || golden != t1.str()) {
      pass = false;
      detail += std::string(name) + " golden trace diff; ";
    }
  }

  double dt = seconds_since(t0);
  if (dt > 6 * 1.0) {  // six runs, < 1 s each
    pass = false;
    detail += "too slow: " + std::to_string(dt) + " s; ";
  }
  report(1, pass, "Fig. 3 golden scenarios reproduce the published outcomes", detail);
}

// ---------------------------------------------------------------------------
// Criterion 2: single-transient correction over randomized seeds
// ---------------------------------------------------------------------------

void criterion_single_transient() {
  const int kSeeds = 1000;
  long long faults_total = 0, corrected_in_period = 0, detected = 0;
  bool pass = true;
  std::string detail;

  for (int seed = 0; seed < kSeeds && pass; ++seed) {
    std::mt19937_64 rng(0x51f7 + seed);
    ScenarioConfig c;
    c.name = "single-transient";
    c.checkpoint_period_us = kUsPerSecond;
    c.duration_us = 12 * kUsPerSecond;
    c.tile_count = 6;
    c.tile_capacity = 100;
    c.freq_levels_pct = {100};
    c.threads = {{"E", Criticality::Essential, 20, true, 0},
                 {"H", Criticality::High, 20, true, 0},
                 {"M", Criticality::Medium, 20, true, 0}};
    c.profile_ref = "Speed";
    c.profile = *find_builtin_profile("Speed");

    // One TransientState fault per chosen period, on a hosting tile, so no
    // thread collects two corruptions in one period.
    std::set<int> periods;
    while (periods.size() < 3) periods.insert(1 + static_cast<int>(rng() % 10));
    for (int p : periods) {
      FaultEvent f;
      f.kind = FaultKind::TransientState;
      f.at_us = static_cast<SimTime>(p) * kUsPerSecond -
                static_cast<SimTime>(rng() % 900'000) - 50'000;
      f.tile = static_cast<TileId>(rng() % 6);
      c.faults.push_back(f);
    }
    c.validate();
    RunResult r = Engine(c).run();

    // map fault index -> injection time
    std::map<std::int64_t, SimTime> injected;
    std::map<std::int64_t, std::string> disposed;
    std::map<std::int64_t, SimTime> disposed_at;
    for (const auto& ev : r.trace.events()) {
      if (ev.type == "FaultInjected") injected[ev.num.at("fault")] = ev.t;
      if (ev.type == "FaultDisposed") {
        disposed[ev.num.at("fault")] = ev.str.at("disposition");
        disposed_at[ev.num.at("fault")] = ev.t;
      }
    }
    for (const auto& [idx, t_inj] : injected) {
      ++faults_total;
      auto d = disposed.find(idx);
      if (d == disposed.end()) {
        pass = false;
        detail = "fault without disposition";
        break;
      }
      if (d->second == "NoEffect") {
        // fault landed on a non-hosting tile; does not count as a corruption
        --faults_total;
        continue;
      }
      if (d->second != "CorrectedStage1" ||
          disposed_at[idx] - t_inj > c.checkpoint_period_us) {
        pass = false;
        detail = "fault " + std::to_string(idx) + " seed " + std::to_string(seed) + " -> " +
                 d->second;
        break;
      }
      ++corrected_in_period;
      // zero silent corruptions: the next checkpoint shows the dissent
      bool seen = false;
      for (const auto& ev : r.trace.events())
        if (ev.type == "DisagreementDetected" && ev.t > t_inj &&
            ev.t <= t_inj + c.checkpoint_period_us)
          seen = true;
      if (!seen) {
        pass = false;
        detail = "silent corruption at seed " + std::to_string(seed);
        break;
      }
      ++detected;
    }
  }

  std::ostringstream os;
  os << corrected_in_period << "/" << faults_total
     << " hosting-tile transients corrected by stage 1 within one period over " << kSeeds
     << " seeds";
  report(2, pass && corrected_in_period == faults_total && faults_total > 1500, os.str(),
         detail);
}

// ---------------------------------------------------------------------------
// Criterion 3: repair-ladder convergence
// ---------------------------------------------------------------------------

void criterion_ladder() {
  bool pass = true;
  std::string detail;
  int episodes = 0;

  for (int trial = 0; trial < 300 && pass; ++trial) {
    std::mt19937_64 rng(0x1adde2 + trial);
    ScenarioConfig c;
    c.name = "ladder";
    c.checkpoint_period_us = 500'000;
    c.duration_us = 30 * kUsPerSecond;
    c.tile_count = 4;
    c.tile_capacity = 100;
    c.tile_variants = 1 + static_cast<int>(rng() % 4);
    c.attempts_per_variant = 1 + static_cast<int>(rng() % 3);
    c.freq_levels_pct = {100};
    c.threads = {{"E", Criticality::Essential, 20, true, 0},
                 {"B", Criticality::Low, 20, false, 0}};
    c.profile_ref = "Speed";
    c.profile = *find_builtin_profile("Speed");

    FaultEvent f;
    f.tile = static_cast<TileId>(rng() % 4);
    f.at_us = 1'200'000 + static_cast<SimTime>(rng() % 1'000'000);
    int k = static_cast<int>(rng() % 3);
    f.kind = k == 0 ? FaultKind::TransientConfig
                    : (k == 1 ? FaultKind::PermanentLogic : FaultKind::PermanentMemory);
    if (f.kind == FaultKind::PermanentLogic) {
      for (int v = 0; v < c.tile_variants; ++v)
        if (rng() % 2) f.affected_variants.insert(v);
      if (f.affected_variants.empty()) f.affected_variants.insert(0);
    }
    c.faults = {f};
    c.validate();
    RunResult r = Engine(c).run();

    TileHealth h = r.state.tile(f.tile).health;
    if (h != TileHealth::Healthy && h != TileHealth::PermanentlyDefective) {
      pass = false;
      detail = "trial " + std::to_string(trial) + " ended " + to_string(h);
      break;
    }
    if (f.kind == FaultKind::TransientConfig && h != TileHealth::Healthy) {
      pass = false;
      detail = "transient-config fault ended permanently defective";
      break;
    }
    int partials = 0, reboots = 0;
    for (const auto& ev : r.trace.events()) {
      if (ev.type == "RepairStarted" && ev.tile == f.tile) ++partials;
      if (ev.type == "FullRebootStarted") ++reboots;
    }
    int bound = c.attempts_per_variant * c.tile_variants + 1;
    if (partials + reboots > bound) {
      pass = false;
      detail = "episode took " + std::to_string(partials + reboots) + " steps, bound " +
               std::to_string(bound);
      break;
    }
    if (partials > 0) ++episodes;
  }
  report(3, pass && episodes > 150,
         "repair episodes converge to Healthy/PermanentlyDefective within "
         "attempts*variants+1 (" +
             std::to_string(episodes) + " episodes)",
         detail);
}

// ---------------------------------------------------------------------------
// Criterion 4: heuristic vs oracle sweep
// ---------------------------------------------------------------------------

void criterion_heuristic_oracle() {
  auto t0 = std::chrono::steady_clock::now();
  bool pass = true;
  std::string detail;
  long long instances = 0, feasible_count = 0;
  double worst_gap = 0;

  const Criticality crits[] = {Criticality::Essential, Criticality::High, Criticality::Medium,
                               Criticality::Low};
  for (const auto& profile : builtin_profiles()) {
    for (int n_tiles = 1; n_tiles <= 6 && pass; ++n_tiles) {
      for (int n_threads = 1; n_threads <= 5 && pass; ++n_threads) {
        for (int rep = 0; rep < 40 && pass; ++rep) {
          std::uint64_t key = fnv1a(profile.name) ^ (n_tiles * 1315423911ULL) ^
                              (n_threads * 2654435761ULL) ^ (rep * 0x9e3779b9ULL);
          std::mt19937_64 rng(key);

          std::vector<Tile> tiles;
          int cap = 80 + static_cast<int>(rng() % 3) * 20;
          for (int i = 0; i < n_tiles; ++i) {
            Tile t;
            t.id = i;
            t.capacity_nominal = cap;
            tiles.push_back(t);
          }
          std::vector<ThreadSpec> threads;
          for (int k = 0; k < n_threads; ++k) {
            ThreadSpec t;
            t.id = "T" + std::to_string(k);
            t.criticality = crits[rng() % 4];
            t.demand = 10 + static_cast<int>(rng() % 51);
            t.rt_guarantee = rng() % 2 == 0;
            threads.push_back(t);
          }
          PerformanceProfile p = profile;
          if (p.name == "Energy" && rep % 3 == 0)
            p.power_budget_mw = 400 + static_cast<long long>(rng() % 5) * 200;

          ++instances;
          MapResult h = map_threads(threads, tiles, p);
          OracleResult o = brute_force_map(threads, tiles, p);

          if (o.feasible && !h.feasible) {
            pass = false;
            detail = "completeness: oracle feasible, heuristic not (profile " + p.name +
                     ", tiles " + std::to_string(n_tiles) + ", threads " +
                     std::to_string(n_threads) + ", rep " + std::to_string(rep) + ")";
            break;
          }
          if (!h.feasible) continue;
          ++feasible_count;

          if (!criticality_monotonicity_violations(threads, tiles, p, h.mapping).empty()) {
            pass = false;
            detail = "monotonicity violated (profile " + p.name + ", tiles " +
                     std::to_string(n_tiles) + ", threads " + std::to_string(n_threads) +
                     ", rep " + std::to_string(rep) + ")";
            break;
          }
          if (o.feasible && o.objective > 0) {
            long long hobj = mapping_objective(threads, h.mapping);
            double gap = 100.0 * static_cast<double>(o.objective - hobj) /
                         static_cast<double>(o.objective);
            if (gap > worst_gap) worst_gap = gap;
            if (gap > 10.0) {
              pass = false;
              detail = "objective gap " + std::to_string(gap) + "% (profile " + p.name +
                       ", tiles " + std::to_string(n_tiles) + ", threads " +
                       std::to_string(n_threads) + ", rep " + std::to_string(rep) + ")";
              break;
            }
          }
        }
      }
    }
  }
  double dt = seconds_since(t0);
  if (dt > 300) {
    pass = false;
    detail += " sweep exceeded 5 minutes";
  }
  std::ostringstream os;
  os << "heuristic vs oracle on " << instances << " instances (" << feasible_count
     << " feasible): worst objective gap " << worst_gap << "%, " << dt << " s";
  report(4, pass, os.str(), detail);
}

// ---------------------------------------------------------------------------
// Criterion 5: strategy soundness fuzz
// ---------------------------------------------------------------------------

void criterion_strategy_fuzz() {
  bool pass = true;
  std::string detail;
  const int kPairs = 10'000;
  int applied = 0;

  const Criticality crits[] = {Criticality::Essential, Criticality::High, Criticality::Medium,
                               Criticality::Low};
  const char* names[] = {"Speed", "Energy", "Robustness", "Function"};

  for (int i = 0; i < kPairs && pass; ++i) {
    std::mt19937_64 rng(0xf022ed + i);
    const PerformanceProfile& profile = *find_builtin_profile(names[rng() % 4]);
    int n_tiles = 2 + static_cast<int>(rng() % 5);
    int n_threads = 1 + static_cast<int>(rng() % 5);

    std::vector<Tile> tiles;
    for (int t = 0; t < n_tiles; ++t) {
      Tile tile;
      tile.id = t;
      tile.capacity_nominal = 80 + static_cast<int>(rng() % 3) * 20;
      tiles.push_back(tile);
    }
    std::vector<ThreadSpec> threads;
    for (int k = 0; k < n_threads; ++k) {
      ThreadSpec t;
      t.id = "T" + std::to_string(k);
      t.criticality = crits[rng() % 4];
      t.demand = 10 + static_cast<int>(rng() % 41);
      t.rt_guarantee = rng() % 2 == 0;
      threads.push_back(t);
    }
    MapResult r = map_threads(threads, tiles, profile);
    if (!r.feasible) continue;

    SystemState s;
    s.threads = threads;
    s.tiles = tiles;
    s.mapping = r.mapping;
    for (const auto& t : tiles) s.validation.emplace(t.id, ValidationMemory(t.id));

    StrategyConfig cfg;
    cfg.freq_levels_pct = rng() % 2 == 0 ? std::vector<int>{100}
                                         : std::vector<int>{100, 125, 150};
    TileId dead = static_cast<TileId>(rng() % n_tiles);
    ReplacementStrategy st = plan_replacement(s, profile, dead, cfg);
    Trace trace;
    s.tile(dead).health = TileHealth::PermanentlyDefective;
    apply_replacement_strategy(s, dead, st, profile, trace);
    ++applied;

    auto violations = mapping_violations(s);
    if (!violations.empty()) {
      pass = false;
      detail = "pair " + std::to_string(i) + ": " + violations.front();
      break;
    }
    // Essential replication never drops below the weakest allowed mode while
    // the oracle deems that achievable on the surviving tiles.
    bool achievable = essential_feasible(threads, s.tiles, profile);
    if (achievable) {
      int weakest = replication_factor(profile.weakest(Criticality::Essential), profile.nmr_n);
      for (const auto& th : threads) {
        if (th.criticality != Criticality::Essential) continue;
        if (replication_level(s, th.id) < weakest) {
          pass = false;
          detail = "pair " + std::to_string(i) + ": essential '" + th.id + "' below " +
                   std::to_string(weakest) + " although achievable";
          break;
        }
      }
    }
  }
  report(5, pass && applied > 5000,
         "replacement strategies stay invariant-sound over " + std::to_string(applied) +
             " applied (scenario, failed-tile) pairs",
         detail);
}

// ---------------------------------------------------------------------------
// Criterion 6: determinism and metrics identity
// ---------------------------------------------------------------------------

void criterion_determinism() {
  bool pass = true;
  std::string detail;

  for (std::uint64_t seed : {11ULL, 29ULL, 83ULL}) {
    ScenarioConfig c;
    c.name = "determinism";
    c.checkpoint_period_us = 250'000;
    c.duration_us = 20 * kUsPerSecond;
    c.tile_count = 6;
    c.tile_capacity = 100;
    c.rng_seed = seed;
    c.threads = {{"E", Criticality::Essential, 25, true, 0},
                 {"H", Criticality::High, 25, true, 0},
                 {"M", Criticality::Medium, 25, false, 0},
                 {"L", Criticality::Low, 25, false, 0}};
    c.profile_ref = "Function";
    c.profile = *find_builtin_profile("Function");
    c.fault_rates_per_hour[FaultKind::TransientState] = 2400.0;
    c.fault_rates_per_hour[FaultKind::TransientConfig] = 600.0;
    c.fault_rates_per_hour[FaultKind::MBU] = 200.0;
    c.fault_rates_per_hour[FaultKind::EccSyndrome] = 400.0;
    c.fault_rates_per_hour[FaultKind::PermanentLogic] = 150.0;
    c.validate();

    RunResult a = Engine(c).run();
    RunResult b = Engine(c).run();
    std::ostringstream ta, tb;
    a.trace.write_ndjson(ta);
    b.trace.write_ndjson(tb);
    if (ta.str() != tb.str()) {
      pass = false;
      detail = "seed " + std::to_string(seed) + ": traces differ";
      break;
    }
    RecomputedTotals totals = recompute_from_trace(a.trace.events());
    std::string why;
    if (!totals_match(a.state.metrics, totals, &why)) {
      pass = false;
      detail = "seed " + std::to_string(seed) + ": " + why;
      break;
    }
  }
  report(6, pass, "byte-identical traces and exact trace-vs-report metric identity", detail);
}

// ---------------------------------------------------------------------------
// Criterion 7: built-in profile table
// ---------------------------------------------------------------------------

void criterion_profile_table() {
  using enum Mode;
  struct Cell {
    const char* profile;
    Criticality cls;
    std::vector<Mode> modes;
  };
  const std::vector<Cell> table = {
      {"Speed", Criticality::Essential, {TMR}},
      {"Speed", Criticality::High, {TMR, DMR}},
      {"Speed", Criticality::Medium, {TMR, DMR}},
      {"Speed", Criticality::Low, {TMR, DMR, Separate}},
      {"Energy", Criticality::Essential, {TMR}},
      {"Energy", Criticality::High, {TMR}},
      {"Energy", Criticality::Medium, {TMR, DMR}},
      {"Energy", Criticality::Low, {DMR, Separate}},
      {"Robustness", Criticality::Essential, {NMR}},
      {"Robustness", Criticality::High, {NMR, TMR}},
      {"Robustness", Criticality::Medium, {TMR, DMR}},
      {"Robustness", Criticality::Low, {TMR, DMR}},
      {"Function", Criticality::Essential, {NMR, TMR}},
      {"Function", Criticality::High, {NMR, TMR}},
      {"Function", Criticality::Medium, {TMR, DMR}},
      {"Function", Criticality::Low, {TMR, DMR, Separate}},
  };
  bool pass = builtin_profiles().size() == 4;
  std::string detail;
  for (const Cell& cell : table) {
    const PerformanceProfile* p = find_builtin_profile(cell.profile);
    if (!p || p->allowed_for(cell.cls) != cell.modes) {
      pass = false;
      detail += std::string(cell.profile) + "/" + to_string(cell.cls) + " mismatch; ";
    }
  }
  report(7, pass, "built-in profile table matches the published matrix cell-for-cell", detail);
}

}  // namespace

int main(int argc, char** argv) {
  std::string root = argc > 1 ? argv[1] : ".";
  criterion_fig3(root);
  criterion_single_transient();
  criterion_ladder();
  criterion_heuristic_oracle();
  criterion_strategy_fuzz();
  criterion_determinism();
  criterion_profile_table();
  if (g_failures) std::printf("%d criterion(s) FAILED\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
