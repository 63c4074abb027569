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

#include "lspool/allocator.hpp"

#include <algorithm>
#include <cassert>
#include <numeric>

namespace lspool {

namespace {

// ---------------------------------------------------------------------------
// Replica packing
// ---------------------------------------------------------------------------

struct PackItem {
  const ThreadSpec* spec = nullptr;
  int replicas = 0;
  long long need_up = 0;  // demand * share_pct per replica
};

struct PackTile {
  const Tile* tile = nullptr;
  long long cap_up = 0;
  long long load_up = 0;

  long long free_up() const { return cap_up - load_up; }
};

using Placement = std::map<ThreadId, std::set<TileId>>;

constexpr long long kPackNodeBudget = 2'000'000;

bool pack_exact_rec(std::vector<PackItem>& items, size_t idx, std::vector<PackTile>& tiles,
                    Placement& out, long long& nodes) {
  if (idx == items.size()) return true;
  const PackItem& item = items[idx];
  const int r = item.replicas;
  if (r == 0) return pack_exact_rec(items, idx + 1, tiles, out, nodes);

  std::vector<int> feasible;
  for (size_t i = 0; i < tiles.size(); ++i)
    if (tiles[i].free_up() >= item.need_up) feasible.push_back(static_cast<int>(i));
  if (static_cast<int>(feasible.size()) < r) return false;

  std::vector<int> pick(r);
  // Enumerate r-subsets of feasible tiles in lexicographic order.
  std::function<bool(int, int)> choose = [&](int start, int depth) -> bool {
    if (--nodes < 0) return false;
    if (depth == r) {
      for (int i : pick) tiles[i].load_up += item.need_up;
      std::set<TileId>& chosen = out[item.spec->id];
      chosen.clear();
      for (int i : pick) chosen.insert(tiles[i].tile->id);
      if (pack_exact_rec(items, idx + 1, tiles, out, nodes)) return true;
      for (int i : pick) tiles[i].load_up -= item.need_up;
      out.erase(item.spec->id);
      return false;
    }
    for (int i = start; i <= static_cast<int>(feasible.size()) - (r - depth); ++i) {
      if (tiles[feasible[i]].free_up() < item.need_up) continue;
      pick[depth] = feasible[i];
      if (choose(i + 1, depth + 1)) return true;
      if (nodes < 0) return false;
    }
    return false;
  };
  return choose(0, 0);
}

/// Greedy spread first (each replica on the least-loaded distinct tile, ties
/// to the lowest id), exact backtracking when the greedy pass fails.
std::optional<Placement> pack_replicas(const std::vector<PackItem>& items,
                                       const std::vector<const Tile*>& tiles,
                                       const ThreadId** first_failed = nullptr) {
  std::vector<PackTile> pt;
  pt.reserve(tiles.size());
  for (const Tile* t : tiles) pt.push_back({t, effective_capacity_up(*t), 0});
  // Clock-gated spares count with their nominal capacity; using one implies
  // re-activating it.
  for (auto& p : pt)
    if (p.tile->health == TileHealth::ClockGated)
      p.cap_up = static_cast<long long>(p.tile->capacity_nominal) * p.tile->freq_pct;

  Placement out;
  bool greedy_ok = true;
  for (const PackItem& item : items) {
    if (item.replicas == 0) continue;
    std::vector<size_t> order(pt.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      if (pt[a].load_up != pt[b].load_up) return pt[a].load_up < pt[b].load_up;
      return pt[a].tile->id < pt[b].tile->id;
    });
    std::set<TileId> chosen;
    for (size_t i : order) {
      if (static_cast<int>(chosen.size()) == item.replicas) break;
      if (pt[i].free_up() >= item.need_up) {
        pt[i].load_up += item.need_up;
        chosen.insert(pt[i].tile->id);
      }
    }
    if (static_cast<int>(chosen.size()) < item.replicas) {
      if (first_failed) *first_failed = &item.spec->id;
      greedy_ok = false;
      break;
    }
    out[item.spec->id] = std::move(chosen);
  }
  if (greedy_ok) return out;

  // The greedy spread can paint itself into a corner that a cleverer packing
  // avoids; fall back to exhaustive search so feasibility verdicts are exact.
  for (auto& p : pt) p.load_up = 0;
  out.clear();
  std::vector<PackItem> sorted = items;
  std::stable_sort(sorted.begin(), sorted.end(), [](const PackItem& a, const PackItem& b) {
    if (a.replicas != b.replicas) return a.replicas > b.replicas;
    return a.need_up > b.need_up;
  });
  long long nodes = kPackNodeBudget;
  if (pack_exact_rec(sorted, 0, pt, out, nodes)) return out;
  return std::nullopt;
}

/// Exhaustive packing that minimizes the modeled energy rate (unused tiles
/// are assumed gated). Used for power-budget feasibility.
std::optional<long long> pack_min_energy(const std::vector<PackItem>& items,
                                         const std::vector<const Tile*>& tiles,
                                         Placement* best_placement = nullptr) {
  std::vector<PackTile> pt;
  for (const Tile* t : tiles) {
    long long cap = effective_capacity_up(*t);
    if (t->health == TileHealth::ClockGated)
      cap = static_cast<long long>(t->capacity_nominal) * t->freq_pct;
    pt.push_back({t, cap, 0});
  }
  std::vector<PackItem> sorted = items;
  std::stable_sort(sorted.begin(), sorted.end(), [](const PackItem& a, const PackItem& b) {
    if (a.replicas != b.replicas) return a.replicas > b.replicas;
    return a.need_up > b.need_up;
  });

  long long best = -1;
  Placement current, best_out;
  long long nodes = kPackNodeBudget;

  auto rate_of = [&]() {
    long long total = 0;
    for (const auto& p : pt)
      if (p.load_up > 0)
        total += 100'000 + 25LL * p.tile->freq_pct * p.load_up / p.tile->capacity_nominal;
    return total;
  };

  std::function<void(size_t)> rec = [&](size_t idx) {
    if (nodes < 0) return;
    if (idx == sorted.size()) {
      long long rate = rate_of();
      if (best < 0 || rate < best) {
        best = rate;
        best_out = current;
      }
      return;
    }
    const PackItem& item = sorted[idx];
    if (item.replicas == 0) {
      rec(idx + 1);
      return;
    }
    const int r = item.replicas;
    std::vector<int> pick(r);
    std::function<void(int, int)> choose = [&](int start, int depth) {
      if (--nodes < 0) return;
      if (depth == r) {
        for (int i : pick) pt[i].load_up += item.need_up;
        if (best < 0 || rate_of() < best) {
          std::set<TileId>& c = current[item.spec->id];
          c.clear();
          for (int i : pick) c.insert(pt[i].tile->id);
          rec(idx + 1);
          current.erase(item.spec->id);
        }
        for (int i : pick) pt[i].load_up -= item.need_up;
        return;
      }
      for (int i = start; i <= static_cast<int>(pt.size()) - (r - depth); ++i) {
        if (pt[i].free_up() < item.need_up) continue;
        pick[depth] = i;
        choose(i + 1, depth + 1);
        if (nodes < 0) return;
      }
    };
    choose(0, 0);
  };
  rec(0);
  if (best < 0) return std::nullopt;
  if (best_placement) *best_placement = best_out;
  return best;
}

// ---------------------------------------------------------------------------
// Heuristic mapper internals
// ---------------------------------------------------------------------------

int mode_position(const PerformanceProfile& profile, Criticality c, Mode m) {
  const auto& list = profile.allowed_for(c);
  for (size_t i = 0; i < list.size(); ++i)
    if (list[i] == m) return static_cast<int>(i);
  return -1;
}

std::vector<const Tile*> usable_tiles(const std::vector<Tile>& tiles) {
  std::vector<const Tile*> out;
  for (const auto& t : tiles)
    if (t.in_service() || t.health == TileHealth::ClockGated) out.push_back(&t);
  return out;
}

/// Mapping order: criticality desc, demand desc, id asc.
std::vector<const ThreadSpec*> mapping_order(const std::vector<ThreadSpec>& threads) {
  std::vector<const ThreadSpec*> order;
  for (const auto& t : threads) order.push_back(&t);
  std::stable_sort(order.begin(), order.end(), [](const ThreadSpec* a, const ThreadSpec* b) {
    if (a->criticality != b->criticality) return a->criticality > b->criticality;
    if (a->demand != b->demand) return a->demand > b->demand;
    return a->id < b->id;
  });
  return order;
}

struct Degrade {
  int pos = 0;        // index into the allowed list
  int share = 100;    // percent, steps of 25, floor 25
  bool desched = false;
};

}  // namespace

long long mapping_objective(const std::vector<ThreadSpec>& threads,
                            const SystemMapping& mapping) {
  long long obj = 0;
  for (const auto& t : threads) {
    const Assignment* a = mapping.find(t.id);
    if (!a || a->mode == Mode::Descheduled) continue;
    obj += criticality_weight(t.criticality) * static_cast<long long>(a->tiles.size());
  }
  return obj;
}

long long mapping_power_uw(const std::vector<ThreadSpec>& threads,
                           const std::vector<Tile>& tiles, const SystemMapping& mapping) {
  auto demand_of = [&](const ThreadId& id) -> long long {
    for (const auto& t : threads)
      if (t.id == id) return t.demand;
    throw ModelError("unknown thread id '" + id + "'");
  };
  long long total = 0;
  for (const auto& t : tiles) {
    if (!mapping.active_tiles.count(t.id)) continue;
    long long load = 0;
    for (const auto& [tid, a] : mapping.assignments)
      if (a.tiles.count(t.id)) load += demand_of(tid) * a.share_pct;
    total += 100'000 + 25LL * t.freq_pct * load / t.capacity_nominal;
  }
  return total;
}

MapResult map_threads(const std::vector<ThreadSpec>& threads, const std::vector<Tile>& tiles,
                      const PerformanceProfile& profile) {
  profile.validate();
  MapResult result;
  std::vector<const Tile*> pool = usable_tiles(tiles);
  std::vector<const ThreadSpec*> order = mapping_order(threads);
  std::vector<Degrade> deg(order.size());

  auto replicas_of = [&](size_t i) {
    const auto& list = profile.allowed_for(order[i]->criticality);
    return replication_factor(list[deg[i].pos], profile.nmr_n);
  };

  auto build_items = [&]() {
    std::vector<PackItem> items;
    for (size_t i = 0; i < order.size(); ++i) {
      if (deg[i].desched) continue;
      items.push_back({order[i], replicas_of(i),
                       static_cast<long long>(order[i]->demand) * deg[i].share});
    }
    return items;
  };

  auto assemble = [&](const Placement& placement) {
    SystemMapping m;
    for (size_t i = 0; i < order.size(); ++i) {
      Assignment a;
      if (deg[i].desched) {
        a.mode = Mode::Descheduled;
      } else {
        a.mode = profile.allowed_for(order[i]->criticality)[deg[i].pos];
        a.tiles = placement.at(order[i]->id);
        a.share_pct = deg[i].share;
      }
      m.assignments[order[i]->id] = std::move(a);
    }
    for (const Tile* t : pool) {
      bool used = false;
      for (const auto& [tid, a] : m.assignments)
        if (a.tiles.count(t->id)) used = true;
      if (t->in_service() || used) m.active_tiles.insert(t->id);
    }
    return m;
  };

  ThreadId last_failed;
  // Attempt the current degradation vector; on success stores the mapping.
  auto attempt = [&](SystemMapping* out) -> bool {
    const ThreadId* failed = nullptr;
    auto placement = pack_replicas(build_items(), pool, &failed);
    if (!placement) {
      if (failed) last_failed = *failed;
      return false;
    }
    SystemMapping m = assemble(*placement);
    if (profile.power_budget_mw) {
      m = minimize_active_tiles(threads, tiles, m);
      if (mapping_power_uw(threads, tiles, m) > *profile.power_budget_mw * 1000) {
        last_failed.clear();
        return false;
      }
    }
    if (out) *out = std::move(m);
    return true;
  };

  // Reduction victims: lowest criticality class first; within a class the
  // computationally expensive threads are reduced first, freeing larger
  // amounts of processing resources per step.
  std::vector<size_t> victims(order.size());
  std::iota(victims.begin(), victims.end(), 0);
  std::stable_sort(victims.begin(), victims.end(), [&](size_t a, size_t b) {
    if (order[a]->criticality != order[b]->criticality)
      return order[a]->criticality < order[b]->criticality;
    if (order[a]->demand != order[b]->demand) return order[a]->demand > order[b]->demand;
    return order[a]->id < order[b]->id;
  });

  SystemMapping mapping;
  while (!attempt(&mapping)) {
    bool stepped = false;
    // All mode reductions first.
    for (size_t v : victims) {
      const auto& list = profile.allowed_for(order[v]->criticality);
      if (!deg[v].desched && deg[v].pos + 1 < static_cast<int>(list.size())) {
        deg[v].pos += 1;
        stepped = true;
        break;
      }
    }
    // Then time-share reduction for sporadic threads.
    if (!stepped) {
      for (size_t v : victims) {
        if (!deg[v].desched && !order[v]->rt_guarantee && deg[v].share > 25) {
          deg[v].share -= 25;
          stepped = true;
          break;
        }
      }
    }
    // Then descheduling, never for Essential threads.
    if (!stepped) {
      for (size_t v : victims) {
        if (!deg[v].desched && order[v]->criticality != Criticality::Essential) {
          deg[v].desched = true;
          stepped = true;
          break;
        }
      }
    }
    if (!stepped) {
      result.feasible = false;
      result.first_unsatisfiable = last_failed.empty() && !order.empty() ? order[0]->id
                                                                         : last_failed;
      return result;
    }
  }

  // Re-traverse the list increasing execution mode, undoing reductions
  // greedily while the mapping stays feasible. Strongest claims first.
  auto strengthen_one = [&](size_t i) {
    if (deg[i].desched) {
      deg[i].desched = false;
      deg[i].pos = static_cast<int>(profile.allowed_for(order[i]->criticality).size()) - 1;
    } else {
      deg[i].pos -= 1;
    }
  };
  auto mode_restore_pass = [&]() {
    bool changed = false;
    for (size_t i = 0; i < order.size(); ++i) {
      while (deg[i].desched || deg[i].pos > 0) {
        Degrade saved = deg[i];
        strengthen_one(i);
        SystemMapping m;
        if (attempt(&m)) {
          mapping = std::move(m);
          changed = true;
        } else {
          deg[i] = saved;
          break;
        }
      }
    }
    return changed;
  };
  auto share_restore_pass = [&]() {
    bool changed = false;
    for (size_t i = 0; i < order.size(); ++i) {
      while (!deg[i].desched && deg[i].share < 100) {
        deg[i].share += 25;
        SystemMapping m;
        if (attempt(&m)) {
          mapping = std::move(m);
          changed = true;
        } else {
          deg[i].share -= 25;
          break;
        }
      }
    }
    return changed;
  };

  auto objective_of_deg = [&]() {
    long long obj = 0;
    for (size_t i = 0; i < order.size(); ++i) {
      if (deg[i].desched) continue;
      const auto& list = profile.allowed_for(order[i]->criticality);
      obj += criticality_weight(order[i]->criticality) *
             replication_factor(list[deg[i].pos], profile.nmr_n);
    }
    return obj;
  };

  // Reductions must land on lower criticality first: when a higher thread is
  // still reduced, shift replication up from a single lower (or later
  // equal-criticality) thread by deepening its mode, descheduling it only as
  // the last resort, optionally flooring sporadic shares at the same time.
  // The exchange is kept when the objective after cascading restores has not
  // dropped.
  auto exchange_pass = [&]() {
    bool changed = false;
    for (size_t i = 0; i < order.size(); ++i) {
      if (!deg[i].desched && deg[i].pos == 0) continue;
      long long obj_before = objective_of_deg();
      bool done = false;
      for (auto jt = victims.begin(); jt != victims.end() && !done; ++jt) {
        size_t j = *jt;
        if (j == i) continue;
        bool lower = order[j]->criticality < order[i]->criticality;
        bool peer = order[j]->criticality == order[i]->criticality;
        if (!lower && !peer) continue;
        if (deg[j].desched) continue;
        // Trading against an earlier peer must strictly pay off, otherwise
        // equal-criticality swaps could cycle.
        bool need_strict = peer && j < i;
        const auto& list_j = profile.allowed_for(order[j]->criticality);
        // in-list deepenings first, then descheduling for non-essential prey
        std::vector<Degrade> options;
        for (int deeper = deg[j].pos + 1; deeper < static_cast<int>(list_j.size()); ++deeper) {
          Degrade d = deg[j];
          d.pos = deeper;
          options.push_back(d);
        }
        if (order[j]->criticality != Criticality::Essential) {
          Degrade d = deg[j];
          d.desched = true;
          options.push_back(d);
        }
        std::vector<Degrade> saved = deg;
        SystemMapping saved_mapping = mapping;
        for (const Degrade& option : options) {
          for (bool floor_shares : {false, true}) {
            deg = saved;
            deg[j] = option;
            strengthen_one(i);
            if (floor_shares)
              for (size_t k = 0; k < order.size(); ++k)
                if (!deg[k].desched && !order[k]->rt_guarantee) deg[k].share = 25;
            SystemMapping m;
            if (attempt(&m)) {
              mapping = std::move(m);
              mode_restore_pass();  // cascade: freed structure may unlock others
              long long obj_after = objective_of_deg();
              if (need_strict ? obj_after > obj_before : obj_after >= obj_before) {
                changed = true;
                done = true;
                break;
              }
            }
            deg = saved;
            mapping = saved_mapping;
          }
          if (done) break;
        }
      }
    }
    return changed;
  };

  // Sporadic threads can prefer reduced processing over a weaker mode:
  // replication buys fault coverage, time share only throughput. Fund a step
  // of strengthening by flooring every sporadic thread's share; the
  // share-restore pass hands back whatever headroom remains, highest
  // criticality first.
  auto share_fund_pass = [&]() {
    bool changed = false;
    for (size_t i = 0; i < order.size(); ++i) {
      if (!deg[i].desched && deg[i].pos == 0) continue;
      std::vector<Degrade> saved = deg;
      strengthen_one(i);
      for (size_t j = 0; j < order.size(); ++j)
        if (!deg[j].desched && !order[j]->rt_guarantee) deg[j].share = 25;
      SystemMapping m;
      if (attempt(&m)) {
        mapping = std::move(m);
        changed = true;
      } else {
        deg = saved;
      }
    }
    return changed;
  };

  // Shares are only raised back once no mode can be bought with them.
  while (mode_restore_pass() | exchange_pass() | share_fund_pass() | share_restore_pass()) {
  }

  result.feasible = true;
  result.mapping = std::move(mapping);
  return result;
}

SystemMapping minimize_active_tiles(const std::vector<ThreadSpec>& threads,
                                    const std::vector<Tile>& tiles,
                                    const SystemMapping& mapping) {
  std::vector<const Tile*> pool = usable_tiles(tiles);
  std::vector<PackItem> items;
  for (const auto& t : threads) {
    const Assignment* a = mapping.find(t.id);
    if (!a || a->mode == Mode::Descheduled || a->tiles.empty()) continue;
    items.push_back(
        {&t, static_cast<int>(a->tiles.size()), static_cast<long long>(t.demand) * a->share_pct});
  }
  std::stable_sort(items.begin(), items.end(), [](const PackItem& a, const PackItem& b) {
    if (a.replicas != b.replicas) return a.replicas > b.replicas;
    return a.need_up > b.need_up;
  });

  auto finish = [&](const Placement& placement, const std::vector<const Tile*>& used_pool) {
    SystemMapping out = mapping;
    for (auto& [tid, a] : out.assignments) {
      auto it = placement.find(tid);
      if (it != placement.end()) a.tiles = it->second;
    }
    out.active_tiles.clear();
    for (const Tile* t : used_pool) {
      bool used = false;
      for (const auto& [tid, ts] : placement)
        if (ts.count(t->id)) used = true;
      if (used) out.active_tiles.insert(t->id);
    }
    return out;
  };

  if (items.empty()) {
    SystemMapping out = mapping;
    out.active_tiles.clear();
    return out;
  }

  int lower = 0;
  for (const auto& item : items) lower = std::max(lower, item.replicas);

  if (pool.size() <= 8) {
    const int n = static_cast<int>(pool.size());
    for (int k = lower; k <= n; ++k) {
      // k-subsets of the pool in lexicographic order; first packable wins.
      std::vector<int> idx(k);
      std::function<std::optional<SystemMapping>(int, int)> pick =
          [&](int start, int depth) -> std::optional<SystemMapping> {
        if (depth == k) {
          std::vector<const Tile*> subset;
          for (int i : idx) subset.push_back(pool[i]);
          if (auto placement = pack_replicas(items, subset)) return finish(*placement, subset);
          return std::nullopt;
        }
        for (int i = start; i <= n - (k - depth); ++i) {
          idx[depth] = i;
          if (auto r = pick(i + 1, depth + 1)) return r;
        }
        return std::nullopt;
      };
      if (auto r = pick(0, 0)) return *r;
    }
    return mapping;  // nothing packed; keep as-is
  }

  // Large pool: first-fit decreasing onto the biggest tiles.
  std::vector<const Tile*> by_cap = pool;
  std::stable_sort(by_cap.begin(), by_cap.end(), [](const Tile* a, const Tile* b) {
    long long ca = static_cast<long long>(a->capacity_nominal) * a->freq_pct;
    long long cb = static_cast<long long>(b->capacity_nominal) * b->freq_pct;
    if (ca != cb) return ca > cb;
    return a->id < b->id;
  });
  for (size_t used = lower; used <= by_cap.size(); ++used) {
    std::vector<const Tile*> subset(by_cap.begin(), by_cap.begin() + used);
    if (auto placement = pack_replicas(items, subset)) return finish(*placement, subset);
  }
  return mapping;
}

// ---------------------------------------------------------------------------
// Exhaustive oracle
// ---------------------------------------------------------------------------

namespace {

struct ModeOption {
  Mode mode;
  int replicas;
};

std::vector<ModeOption> thread_options(const ThreadSpec& t, const PerformanceProfile& profile) {
  std::vector<ModeOption> opts;
  for (Mode m : profile.allowed_for(t.criticality))
    opts.push_back({m, replication_factor(m, profile.nmr_n)});
  if (t.criticality != Criticality::Essential) opts.push_back({Mode::Descheduled, 0});
  return opts;
}

}  // namespace

OracleResult brute_force_map(const std::vector<ThreadSpec>& threads,
                             const std::vector<Tile>& tiles,
                             const PerformanceProfile& profile) {
  if (tiles.size() > 8 || threads.size() > 6)
    throw OracleTooLarge("oracle guarded to <=8 tiles and <=6 threads, got " +
                         std::to_string(tiles.size()) + " tiles / " +
                         std::to_string(threads.size()) + " threads");
  profile.validate();
  std::vector<const Tile*> pool = usable_tiles(tiles);

  std::vector<std::vector<ModeOption>> options;
  for (const auto& t : threads) options.push_back(thread_options(t, profile));

  // Enumerate every mode vector, then test them in descending objective
  // order; the first feasible vector maximizes the primary objective.
  std::vector<std::vector<int>> vectors;
  std::vector<int> current(threads.size(), 0);
  std::function<void(size_t)> gen = [&](size_t i) {
    if (i == threads.size()) {
      vectors.push_back(current);
      return;
    }
    for (size_t o = 0; o < options[i].size(); ++o) {
      current[i] = static_cast<int>(o);
      gen(i + 1);
    }
  };
  gen(0);

  auto objective_of = [&](const std::vector<int>& vec) {
    long long obj = 0;
    for (size_t i = 0; i < vec.size(); ++i)
      obj += criticality_weight(threads[i].criticality) * options[i][vec[i]].replicas;
    return obj;
  };
  std::stable_sort(vectors.begin(), vectors.end(),
                   [&](const std::vector<int>& a, const std::vector<int>& b) {
                     return objective_of(a) > objective_of(b);
                   });

  const long long budget_uw =
      profile.power_budget_mw ? *profile.power_budget_mw * 1000 : -1;

  for (const auto& vec : vectors) {
    // Feasibility with the most relaxed shares decides whether this mode
    // vector is attainable at all.
    auto items_with = [&](bool relaxed) {
      std::vector<PackItem> items;
      for (size_t i = 0; i < vec.size(); ++i) {
        const ModeOption& o = options[i][vec[i]];
        if (o.replicas == 0) continue;
        int share = threads[i].rt_guarantee ? 100 : (relaxed ? 25 : 100);
        items.push_back({&threads[i], o.replicas,
                         static_cast<long long>(threads[i].demand) * share});
      }
      return items;
    };

    auto feasible = [&](const std::vector<PackItem>& items) -> std::optional<Placement> {
      if (budget_uw >= 0) {
        Placement p;
        auto rate = pack_min_energy(items, pool, &p);
        if (rate && *rate <= budget_uw) return p;
        return std::nullopt;
      }
      return pack_replicas(items, pool);
    };

    if (!feasible(items_with(true))) continue;

    // Raise shares back toward 100 greedily, highest criticality first.
    std::vector<int> share(threads.size(), 100);
    for (size_t i = 0; i < threads.size(); ++i)
      if (!threads[i].rt_guarantee && options[i][vec[i]].replicas > 0) share[i] = 25;

    std::vector<size_t> raise_order(threads.size());
    std::iota(raise_order.begin(), raise_order.end(), 0);
    std::stable_sort(raise_order.begin(), raise_order.end(), [&](size_t a, size_t b) {
      return threads[a].criticality > threads[b].criticality;
    });

    auto items_for_shares = [&]() {
      std::vector<PackItem> items;
      for (size_t i = 0; i < vec.size(); ++i) {
        const ModeOption& o = options[i][vec[i]];
        if (o.replicas == 0) continue;
        items.push_back({&threads[i], o.replicas,
                         static_cast<long long>(threads[i].demand) * share[i]});
      }
      return items;
    };

    Placement placement = *feasible(items_for_shares());
    for (size_t i : raise_order) {
      while (share[i] < 100) {
        share[i] += 25;
        if (auto p = feasible(items_for_shares())) {
          placement = *p;
        } else {
          share[i] -= 25;
          break;
        }
      }
    }

    SystemMapping m;
    for (size_t i = 0; i < threads.size(); ++i) {
      Assignment a;
      a.mode = options[i][vec[i]].mode;
      if (a.mode != Mode::Descheduled) {
        a.tiles = placement.at(threads[i].id);
        a.share_pct = share[i];
      }
      m.assignments[threads[i].id] = std::move(a);
    }
    for (const auto& [tid, a] : m.assignments)
      for (TileId t : a.tiles) m.active_tiles.insert(t);
    if (budget_uw < 0)
      for (const Tile* t : pool)
        if (t->in_service()) m.active_tiles.insert(t->id);

    return {true, std::move(m), objective_of(vec)};
  }
  return {false, {}, 0};
}

bool essential_feasible(const std::vector<ThreadSpec>& threads, const std::vector<Tile>& tiles,
                        const PerformanceProfile& profile) {
  std::vector<const Tile*> pool = usable_tiles(tiles);
  std::vector<PackItem> items;
  for (const auto& t : threads) {
    if (t.criticality != Criticality::Essential) continue;
    Mode weakest = profile.weakest(Criticality::Essential);
    items.push_back({&t, replication_factor(weakest, profile.nmr_n),
                     static_cast<long long>(t.demand) * 100});
  }
  if (items.empty()) return true;
  if (profile.power_budget_mw) {
    auto rate = pack_min_energy(items, pool);
    return rate && *rate <= *profile.power_budget_mw * 1000;
  }
  return pack_replicas(items, pool).has_value();
}

std::vector<ThreadId> criticality_monotonicity_violations(
    const std::vector<ThreadSpec>& threads, const std::vector<Tile>& tiles,
    const PerformanceProfile& profile, const SystemMapping& mapping) {
  std::vector<ThreadId> out;
  std::vector<const Tile*> pool = usable_tiles(tiles);

  // Degradation view of the mapping: list position (length = descheduled)
  // and time share per thread. Threads running outside their allowed list
  // (a strategy fallback) are not audited.
  struct View {
    const ThreadSpec* spec;
    int pos;
    int share;
  };
  std::vector<View> view;
  for (const auto& t : threads) {
    const Assignment* a = mapping.find(t.id);
    if (!a) continue;
    const auto& list = profile.allowed_for(t.criticality);
    int pos;
    if (a->mode == Mode::Descheduled) {
      pos = static_cast<int>(list.size());
    } else {
      pos = mode_position(profile, t.criticality, a->mode);
      if (pos < 0) continue;
    }
    view.push_back({&t, pos, a->mode == Mode::Descheduled ? 100 : a->share_pct});
  }

  // Feasibility of a hypothetical position vector, matching the heuristic's
  // own acceptance test (exact packing plus the power budget after
  // concentration).
  auto feasible = [&](const std::vector<View>& v) {
    std::vector<PackItem> items;
    for (const View& e : v) {
      const auto& list = profile.allowed_for(e.spec->criticality);
      if (e.pos >= static_cast<int>(list.size())) continue;  // descheduled
      items.push_back({e.spec, replication_factor(list[e.pos], profile.nmr_n),
                       static_cast<long long>(e.spec->demand) * e.share});
    }
    auto placement = pack_replicas(items, pool);
    if (!placement) return false;
    if (!profile.power_budget_mw) return true;
    SystemMapping m;
    for (const View& e : v) {
      const auto& list = profile.allowed_for(e.spec->criticality);
      Assignment a;
      if (e.pos >= static_cast<int>(list.size())) {
        a.mode = Mode::Descheduled;
      } else {
        a.mode = list[e.pos];
        a.tiles = placement->at(e.spec->id);
        a.share_pct = e.share;
      }
      m.assignments[e.spec->id] = std::move(a);
    }
    for (const auto& [tid, a] : m.assignments)
      for (TileId t : a.tiles) m.active_tiles.insert(t);
    m = minimize_active_tiles(threads, tiles, m);
    return mapping_power_uw(threads, tiles, m) <= *profile.power_budget_mw * 1000;
  };

  // A thread below its strongest mode is a violation if one step of
  // strengthening is feasible outright, or could be funded by deepening a
  // single strictly-lower-criticality thread within its own allowed list.
  for (size_t i = 0; i < view.size(); ++i) {
    if (view[i].pos == 0) continue;
    bool flagged = false;

    std::vector<View> up = view;
    up[i].pos -= 1;
    if (feasible(up)) flagged = true;

    for (size_t j = 0; j < view.size() && !flagged; ++j) {
      if (view[j].spec->criticality >= view[i].spec->criticality) continue;
      const auto& list_j = profile.allowed_for(view[j].spec->criticality);
      if (view[j].pos >= static_cast<int>(list_j.size())) continue;  // already descheduled
      for (int deeper = view[j].pos + 1; deeper < static_cast<int>(list_j.size()); ++deeper) {
        std::vector<View> trial = view;
        trial[i].pos -= 1;
        trial[j].pos = deeper;
        if (feasible(trial)) {
          flagged = true;
          break;
        }
      }
    }
    if (flagged) out.push_back(view[i].spec->id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Replacement strategies
// ---------------------------------------------------------------------------

namespace {

/// Scratch planning view used while generating a strategy delta.
struct Plan {
  const std::vector<ThreadSpec>* threads = nullptr;
  std::vector<Tile> tiles;
  SystemMapping mapping;
  const PerformanceProfile* profile = nullptr;
  std::vector<MappingEdit> edits;

  const ThreadSpec& spec(const ThreadId& id) const {
    for (const auto& t : *threads)
      if (t.id == id) return t;
    throw ModelError("unknown thread id '" + id + "'");
  }

  Tile& tile(TileId id) {
    for (auto& t : tiles)
      if (t.id == id) return t;
    throw ModelError("unknown tile id " + std::to_string(id));
  }

  long long load_up(TileId id) const {
    long long load = 0;
    for (const auto& [tid, a] : mapping.assignments)
      if (a.tiles.count(id)) load += static_cast<long long>(spec(tid).demand) * a.share_pct;
    return load;
  }

  long long free_up(TileId id) {
    const Tile& t = tile(id);
    if (!t.in_service()) return 0;
    return effective_capacity_up(t) - load_up(id);
  }

  std::vector<TileId> service_tiles() const {
    std::vector<TileId> out;
    for (const auto& t : tiles)
      if (t.in_service()) out.push_back(t.id);
    return out;
  }

  void migrate(const ThreadId& id, TileId from, TileId to) {
    Assignment& a = mapping.assignments.at(id);
    a.tiles.erase(from);
    a.tiles.insert(to);
    edits.push_back({MappingEdit::Kind::Migrate, id, from, to, a.mode, 0, {}});
  }

  /// Reduce mode one list position, dropping replicas from `prefer` first,
  /// then from the most loaded hosts.
  bool reduce_mode_step(const ThreadId& id, std::vector<TileId> prefer) {
    Assignment& a = mapping.assignments.at(id);
    const ThreadSpec& s = spec(id);
    const auto& list = profile->allowed_for(s.criticality);
    int pos = -1;
    for (size_t i = 0; i < list.size(); ++i)
      if (list[i] == a.mode) pos = static_cast<int>(i);
    if (pos < 0 || pos + 1 >= static_cast<int>(list.size())) return false;
    Mode weaker = list[pos + 1];
    int want = replication_factor(weaker, profile->nmr_n);
    std::vector<TileId> drops;
    auto drop_one = [&](TileId t) {
      if (a.tiles.count(t) && static_cast<int>(a.tiles.size()) > want) {
        a.tiles.erase(t);
        drops.push_back(t);
      }
    };
    for (TileId t : prefer) drop_one(t);
    while (static_cast<int>(a.tiles.size()) > want) {
      // most loaded first, ties to the highest id
      TileId pick = -1;
      long long pick_load = -1;
      for (TileId t : a.tiles) {
        long long l = load_up(t);
        if (l > pick_load || (l == pick_load && t > pick)) {
          pick = t;
          pick_load = l;
        }
      }
      drop_one(pick);
    }
    a.mode = weaker;
    edits.push_back({MappingEdit::Kind::ReduceMode, id, -1, -1, weaker, 0, drops});
    return true;
  }

  void deschedule(const ThreadId& id) {
    Assignment& a = mapping.assignments.at(id);
    a.mode = Mode::Descheduled;
    a.tiles.clear();
    edits.push_back({MappingEdit::Kind::Deschedule, id, -1, -1, Mode::Descheduled, 0, {}});
  }

  void set_share(const ThreadId& id, int pct) {
    mapping.assignments.at(id).share_pct = pct;
    edits.push_back({MappingEdit::Kind::SetShare, id, -1, -1, Mode::Descheduled, pct, {}});
  }

  void set_freq(TileId id, int pct) {
    tile(id).freq_pct = pct;
    edits.push_back({MappingEdit::Kind::SetFreq, "", id, -1, Mode::Descheduled, pct, {}});
  }

  void gate(TileId id) {
    tile(id).health = TileHealth::ClockGated;
    mapping.active_tiles.erase(id);
    edits.push_back({MappingEdit::Kind::Gate, "", id, -1, Mode::Descheduled, 0, {}});
  }
};

struct Orphan {
  ThreadId thread;
  long long need_up;
  Criticality crit;
};

std::vector<Orphan> orphans_of(const Plan& p, TileId failed) {
  std::vector<Orphan> out;
  for (const auto& [tid, a] : p.mapping.assignments) {
    if (!a.tiles.count(failed)) continue;
    const ThreadSpec& s = p.spec(tid);
    out.push_back({tid, static_cast<long long>(s.demand) * a.share_pct, s.criticality});
  }
  std::stable_sort(out.begin(), out.end(), [&](const Orphan& a, const Orphan& b) {
    if (a.crit != b.crit) return a.crit > b.crit;
    if (a.need_up != b.need_up) return a.need_up > b.need_up;
    return a.thread < b.thread;
  });
  return out;
}

/// Candidate target tiles for a replica of `thread`: in service, not already
/// hosting it, ordered most-free first (ties to the lowest id).
std::vector<TileId> targets_for(Plan& p, const ThreadId& thread) {
  const Assignment& a = p.mapping.assignments.at(thread);
  std::vector<TileId> out;
  for (TileId t : p.service_tiles())
    if (!a.tiles.count(t)) out.push_back(t);
  std::stable_sort(out.begin(), out.end(), [&](TileId x, TileId y) {
    long long fx = p.free_up(x), fy = p.free_up(y);
    if (fx != fy) return fx > fy;
    return x < y;
  });
  return out;
}

bool relocate_free(Plan& p, const Orphan& o, TileId failed) {
  for (TileId t : targets_for(p, o.thread)) {
    if (p.free_up(t) >= o.need_up) {
      p.migrate(o.thread, failed, t);
      return true;
    }
  }
  return false;
}

bool relocate_prune(Plan& p, const Orphan& o, TileId failed) {
  if (relocate_free(p, o, failed)) return true;
  for (TileId k : targets_for(p, o.thread)) {
    Plan trial = p;
    bool fits = false;
    while (trial.free_up(k) < o.need_up) {
      // lowest-criticality victim with a replica on k that can still degrade
      ThreadId victim;
      Criticality vc = o.crit;
      long long vneed = -1;
      for (const auto& [tid, a] : trial.mapping.assignments) {
        if (tid == o.thread || !a.tiles.count(k)) continue;
        const ThreadSpec& s = trial.spec(tid);
        if (s.criticality >= o.crit) continue;
        long long n = static_cast<long long>(s.demand) * a.share_pct;
        if (victim.empty() || s.criticality < vc ||
            (s.criticality == vc && n > vneed) ||
            (s.criticality == vc && n == vneed && tid < victim)) {
          victim = tid;
          vc = s.criticality;
          vneed = n;
        }
      }
      if (victim.empty()) break;
      if (!trial.reduce_mode_step(victim, {k})) {
        if (trial.spec(victim).criticality != Criticality::Essential &&
            trial.mapping.assignments.at(victim).mode == Mode::Separate) {
          // separate instance on k is the last replica; sacrifice it
          if (trial.mapping.assignments.at(victim).tiles.count(k))
            trial.deschedule(victim);
          else
            break;
        } else {
          break;
        }
      }
    }
    fits = trial.free_up(k) >= o.need_up;
    if (fits) {
      trial.migrate(o.thread, failed, k);
      p = std::move(trial);
      return true;
    }
  }
  return false;
}

bool relocate_freq(Plan& p, const Orphan& o, TileId failed, const StrategyConfig& cfg) {
  if (relocate_free(p, o, failed)) return true;
  // smallest frequency raise that makes room, ties to the lowest tile id
  TileId best = -1;
  int best_level = 0;
  int best_steps = 1 << 30;
  for (TileId k : targets_for(p, o.thread)) {
    const Tile& t = p.tile(k);
    int steps = 0;
    for (int level : cfg.freq_levels_pct) {
      if (level <= t.freq_pct) continue;
      ++steps;
      long long cap = static_cast<long long>(t.capacity_nominal) * level;
      if (cap - p.load_up(k) >= o.need_up) {
        if (steps < best_steps) {
          best = k;
          best_level = level;
          best_steps = steps;
        }
        break;
      }
    }
  }
  if (best < 0) return false;
  p.set_freq(best, best_level);
  p.migrate(o.thread, failed, best);
  return true;
}

bool relocate_share(Plan& p, const Orphan& o, TileId failed) {
  if (relocate_free(p, o, failed)) return true;
  for (TileId k : targets_for(p, o.thread)) {
    Plan trial = p;
    while (trial.free_up(k) < o.need_up) {
      // sporadic lower-criticality thread on k with share headroom
      ThreadId victim;
      Criticality vc = o.crit;
      long long vneed = -1;
      for (const auto& [tid, a] : trial.mapping.assignments) {
        if (tid == o.thread || !a.tiles.count(k) || a.share_pct <= 25) continue;
        const ThreadSpec& s = trial.spec(tid);
        if (s.rt_guarantee || s.criticality >= o.crit) continue;
        long long n = static_cast<long long>(s.demand) * a.share_pct;
        if (victim.empty() || s.criticality < vc ||
            (s.criticality == vc && n > vneed) ||
            (s.criticality == vc && n == vneed && tid < victim)) {
          victim = tid;
          vc = s.criticality;
          vneed = n;
        }
      }
      if (victim.empty()) break;
      trial.set_share(victim, trial.mapping.assignments.at(victim).share_pct - 25);
    }
    if (trial.free_up(k) >= o.need_up) {
      trial.migrate(o.thread, failed, k);
      p = std::move(trial);
      return true;
    }
  }
  return false;
}

/// Under a power budget, drain the least-loaded tiles into free capacity
/// elsewhere and gate them.
void gate_idle_tiles(Plan& p) {
  if (!p.profile->power_budget_mw) return;
  bool progressed = true;
  while (progressed) {
    progressed = false;
    // gate tiles that are already idle
    for (const Tile& t : p.tiles)
      if (t.in_service() && p.mapping.active_tiles.count(t.id) && p.load_up(t.id) == 0) {
        p.gate(t.id);
        progressed = true;
      }
    // try to fully drain a busy tile, lightest load first
    std::vector<TileId> candidates;
    for (const Tile& t : p.tiles)
      if (t.in_service() && p.mapping.active_tiles.count(t.id) && p.load_up(t.id) > 0)
        candidates.push_back(t.id);
    std::stable_sort(candidates.begin(), candidates.end(), [&](TileId x, TileId y) {
      long long lx = p.load_up(x), ly = p.load_up(y);
      if (lx != ly) return lx < ly;
      return x < y;
    });
    for (TileId drain : candidates) {
      Plan trial = p;
      bool ok = true;
      std::vector<ThreadId> moved;
      for (const auto& [tid, a] : p.mapping.assignments)
        if (a.tiles.count(drain)) moved.push_back(tid);
      for (const ThreadId& tid : moved) {
        const ThreadSpec& s = trial.spec(tid);
        long long need = static_cast<long long>(s.demand) *
                         trial.mapping.assignments.at(tid).share_pct;
        TileId to = -1;
        for (TileId t : targets_for(trial, tid)) {
          if (t == drain) continue;
          if (trial.free_up(t) >= need) {
            to = t;
            break;
          }
        }
        if (to < 0) {
          ok = false;
          break;
        }
        trial.migrate(tid, drain, to);
      }
      if (ok && !moved.empty()) {
        trial.gate(drain);
        p = std::move(trial);
        progressed = true;
        break;
      }
    }
  }
}

std::optional<Plan> generate_strategy(const SystemState& state,
                                      const PerformanceProfile& profile, TileId failed,
                                      const StrategyConfig& cfg, StrategyKind kind) {
  Plan p;
  p.threads = &state.threads;
  p.tiles = state.tiles;
  p.mapping = state.mapping;
  p.profile = &profile;
  p.tile(failed).health = TileHealth::PermanentlyDefective;
  p.mapping.active_tiles.erase(failed);

  for (const Orphan& o : orphans_of(p, failed)) {
    // Skip threads already descheduled.
    if (p.mapping.assignments.at(o.thread).mode == Mode::Descheduled) continue;
    bool placed = false;
    switch (kind) {
      case StrategyKind::PruneLowCriticality:
        placed = relocate_prune(p, o, failed);
        break;
      case StrategyKind::FrequencyIncrease:
        placed = relocate_freq(p, o, failed, cfg);
        break;
      case StrategyKind::TimeShareReduction:
        placed = relocate_share(p, o, failed);
        break;
      case StrategyKind::Hybrid:
        placed = relocate_prune(p, o, failed) || relocate_freq(p, o, failed, cfg) ||
                 relocate_share(p, o, failed);
        break;
    }
    if (!placed) {
      // The replica cannot be rehosted under this strategy kind. Pruning
      // (and Hybrid) may reduce the thread itself instead; other kinds fail.
      bool may_self_reduce =
          kind == StrategyKind::PruneLowCriticality || kind == StrategyKind::Hybrid;
      if (!may_self_reduce) return std::nullopt;
      if (p.reduce_mode_step(o.thread, {failed})) continue;
      if (o.crit != Criticality::Essential) {
        p.deschedule(o.thread);
        continue;
      }
      return std::nullopt;
    }
  }

  if (kind == StrategyKind::TimeShareReduction || kind == StrategyKind::Hybrid)
    gate_idle_tiles(p);

  // Validate: simulate the post-application state.
  SystemState probe = state;
  probe.tiles = p.tiles;
  probe.mapping = p.mapping;
  probe.tile(failed).health = TileHealth::PermanentlyDefective;
  if (!mapping_violations(probe).empty()) return std::nullopt;
  for (const auto& t : state.threads) {
    const Assignment* a = p.mapping.find(t.id);
    if (!a) continue;
    if (a->mode == Mode::Descheduled) {
      if (t.criticality >= Criticality::High) return std::nullopt;
      continue;
    }
    if (mode_position(profile, t.criticality, a->mode) < 0) return std::nullopt;
  }
  if (profile.power_budget_mw &&
      mapping_power_uw(state.threads, p.tiles, p.mapping) > *profile.power_budget_mw * 1000)
    return std::nullopt;
  return p;
}

std::vector<StrategyKind> preference_order(const PerformanceProfile& profile) {
  using enum StrategyKind;
  if (profile.name == "Speed") return {FrequencyIncrease, PruneLowCriticality,
                                       TimeShareReduction, Hybrid};
  if (profile.name == "Energy" || profile.power_budget_mw)
    return {TimeShareReduction, PruneLowCriticality, FrequencyIncrease, Hybrid};
  return {PruneLowCriticality, FrequencyIncrease, TimeShareReduction, Hybrid};
}

}  // namespace

ReplacementStrategy plan_replacement(const SystemState& state, const PerformanceProfile& profile,
                                     TileId failed_tile, const StrategyConfig& cfg) {
  ReplacementStrategy best;
  best.for_tile = failed_tile;

  struct Candidate {
    int rank;
    ReplacementStrategy strategy;
  };
  std::vector<Candidate> feasible;
  const auto prefs = preference_order(profile);
  for (size_t rank = 0; rank < prefs.size(); ++rank) {
    StrategyKind kind = prefs[rank];
    auto plan = generate_strategy(state, profile, failed_tile, cfg, kind);
    if (!plan) continue;
    ReplacementStrategy s;
    s.for_tile = failed_tile;
    s.kind = kind;
    s.feasible = true;
    s.delta = plan->edits;
    s.energy_rate_uw = mapping_power_uw(state.threads, plan->tiles, plan->mapping);
    s.migrations = 0;
    for (const auto& e : s.delta)
      if (e.kind == MappingEdit::Kind::Migrate) s.migrations += 1;
    feasible.push_back({static_cast<int>(rank), std::move(s)});
  }
  if (feasible.empty()) {
    best.feasible = false;
    best.kind = prefs.front();
    return best;
  }
  std::stable_sort(feasible.begin(), feasible.end(), [](const Candidate& a, const Candidate& b) {
    if (a.rank != b.rank) return a.rank < b.rank;
    if (a.strategy.energy_rate_uw != b.strategy.energy_rate_uw)
      return a.strategy.energy_rate_uw < b.strategy.energy_rate_uw;
    return a.strategy.migrations < b.strategy.migrations;
  });
  return feasible.front().strategy;
}

StrategyKind select_strategy_kind(const SystemState& state, const PerformanceProfile& profile,
                                  TileId failed_tile, const StrategyConfig& cfg) {
  return plan_replacement(state, profile, failed_tile, cfg).kind;
}

std::map<TileId, ReplacementStrategy> precompute_replacement_strategies(
    const SystemState& state, const PerformanceProfile& profile, const StrategyConfig& cfg) {
  std::map<TileId, ReplacementStrategy> out;
  for (const auto& t : state.tiles) {
    if (t.health == TileHealth::PermanentlyDefective) continue;
    out[t.id] = plan_replacement(state, profile, t.id, cfg);
  }
  return out;
}

namespace {

Mode mode_for_replicas(int n) {
  switch (n) {
    case 0: return Mode::Descheduled;
    case 1: return Mode::Separate;
    case 2: return Mode::DMR;
    case 3: return Mode::TMR;
    default: return Mode::NMR;
  }
}

}  // namespace

SystemMapping apply_replacement_strategy(SystemState& state, TileId failed_tile,
                                         const ReplacementStrategy& strategy,
                                         const PerformanceProfile& profile, Trace& trace) {
  auto emit = [&](const char* type) -> TraceEvent& {
    return trace.emit(state.time, state.epoch, type);
  };

  {
    TraceEvent& ev = emit("StrategyApplied");
    ev.tile = failed_tile;
    ev.str["kind"] = to_string(strategy.kind);
    ev.str["feasible"] = strategy.feasible ? "true" : "false";
  }

  state.mapping.active_tiles.erase(failed_tile);

  if (strategy.feasible) {
    for (const MappingEdit& e : strategy.delta) {
      switch (e.kind) {
        case MappingEdit::Kind::Migrate: {
          Assignment& a = state.mapping.assignments.at(e.thread);
          a.tiles.erase(e.a);
          a.tiles.insert(e.b);
          state.clear_replica_perturb(e.thread, e.a);
          // The new host copies the state from a majority sibling.
          state.clear_replica_perturb(e.thread, e.b);
          TraceEvent& ev = emit("ReplicaMigrated");
          ev.thread = e.thread;
          ev.num["from"] = e.a;
          ev.num["to"] = e.b;
          break;
        }
        case MappingEdit::Kind::ReduceMode: {
          Assignment& a = state.mapping.assignments.at(e.thread);
          for (TileId d : e.drop_tiles) {
            a.tiles.erase(d);
            state.clear_replica_perturb(e.thread, d);
          }
          a.mode = e.mode;
          TraceEvent& ev = emit("ModeReduced");
          ev.thread = e.thread;
          ev.str["mode"] = to_string(e.mode);
          break;
        }
        case MappingEdit::Kind::SetShare: {
          state.mapping.assignments.at(e.thread).share_pct = e.value;
          TraceEvent& ev = emit("TimeShareChanged");
          ev.thread = e.thread;
          ev.num["share_pct"] = e.value;
          break;
        }
        case MappingEdit::Kind::SetFreq: {
          state.tile(e.a).freq_pct = e.value;
          TraceEvent& ev = emit("FrequencyChanged");
          ev.tile = e.a;
          ev.num["freq_pct"] = e.value;
          break;
        }
        case MappingEdit::Kind::Gate: {
          state.tile(e.a).health = TileHealth::ClockGated;
          state.mapping.active_tiles.erase(e.a);
          emit("TileGated").tile = e.a;
          break;
        }
        case MappingEdit::Kind::Ungate: {
          state.tile(e.a).health = TileHealth::Healthy;
          state.mapping.active_tiles.insert(e.a);
          emit("TileUngated").tile = e.a;
          break;
        }
        case MappingEdit::Kind::Deschedule: {
          Assignment& a = state.mapping.assignments.at(e.thread);
          for (TileId d : a.tiles) state.clear_replica_perturb(e.thread, d);
          a.mode = Mode::Descheduled;
          a.tiles.clear();
          emit("ThreadDescheduled").thread = e.thread;
          break;
        }
      }
    }
  }

  // Residual cleanup: any replica still on the dead tile is dropped and the
  // mode adjusted to the surviving count. Covers infeasible strategies and
  // deltas that became stale.
  for (auto& [tid, a] : state.mapping.assignments) {
    if (!a.tiles.count(failed_tile)) continue;
    a.tiles.erase(failed_tile);
    state.clear_replica_perturb(tid, failed_tile);
    Mode adjusted = a.mode == Mode::NMR && static_cast<int>(a.tiles.size()) >= 4
                        ? Mode::NMR
                        : mode_for_replicas(static_cast<int>(a.tiles.size()));
    if (adjusted != a.mode) {
      a.mode = adjusted;
      TraceEvent& ev = emit(adjusted == Mode::Descheduled ? "ThreadDescheduled" : "ModeReduced");
      ev.thread = tid;
      if (adjusted != Mode::Descheduled) ev.str["mode"] = to_string(adjusted);
    }
  }

  // Deschedule lowest-criticality threads until the mapping is valid.
  while (!mapping_violations(state).empty()) {
    const ThreadSpec* victim = nullptr;
    for (const auto& t : state.threads) {
      const Assignment* a = state.mapping.find(t.id);
      if (!a || a->mode == Mode::Descheduled) continue;
      if (!victim || t.criticality < victim->criticality ||
          (t.criticality == victim->criticality && t.demand > victim->demand))
        victim = &t;
    }
    if (!victim) break;
    Assignment& a = state.mapping.assignments.at(victim->id);
    for (TileId d : a.tiles) state.clear_replica_perturb(victim->id, d);
    a.mode = Mode::Descheduled;
    a.tiles.clear();
    emit("ThreadDescheduled").thread = victim->id;
  }

  // Dropping dead replicas may have pushed Essential or High threads below
  // their allowed modes. Stage 3 then sacrifices lower-criticality work
  // wholesale: remap the surviving tiles with the heuristic.
  bool critical_degraded = false;
  for (const auto& t : state.threads) {
    if (t.criticality < Criticality::High) continue;
    const Assignment* a = state.mapping.find(t.id);
    if (!a || mode_position(profile, t.criticality, a->mode) < 0) critical_degraded = true;
  }
  if (critical_degraded) {
    std::vector<ThreadSpec> considered = state.threads;
    MapResult r = map_threads(considered, state.tiles, profile);
    std::vector<ThreadId> shed;
    while (!r.feasible && !considered.empty()) {
      ThreadId victim = r.first_unsatisfiable.empty() ? considered.front().id
                                                      : r.first_unsatisfiable;
      shed.push_back(victim);
      considered.erase(std::remove_if(considered.begin(), considered.end(),
                                      [&](const ThreadSpec& t) { return t.id == victim; }),
                       considered.end());
      r = map_threads(considered, state.tiles, profile);
    }
    state.mapping = r.mapping;
    for (const ThreadId& id : shed) {
      state.mapping.assignments[id] = Assignment{Mode::Descheduled, {}, 100};
      emit("ThreadDescheduled").thread = id;
    }
    for (const auto& t : state.tiles)
      if (t.in_service()) state.mapping.active_tiles.insert(t.id);
    TraceEvent& ev = emit("MappingComputed");
    ev.str["cause"] = "ReplacementFallback";
    ev.str["profile"] = profile.name;
  }

  // Moved or vanished replicas do not carry their modeled state along; new
  // hosts start from the majority state.
  for (auto it = state.perturb.begin(); it != state.perturb.end();) {
    const Assignment* a = state.mapping.find(it->first);
    auto& tiles_map = it->second;
    for (auto jt = tiles_map.begin(); jt != tiles_map.end();) {
      if (!a || a->mode == Mode::Descheduled || !a->tiles.count(jt->first))
        jt = tiles_map.erase(jt);
      else
        ++jt;
    }
    it = tiles_map.empty() ? state.perturb.erase(it) : std::next(it);
  }

  return state.mapping;
}

}  // namespace lspool
