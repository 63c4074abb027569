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

#include "lspool/system_state.hpp"

#include <algorithm>

namespace lspool {

Tile& SystemState::tile(TileId id) {
  for (auto& t : tiles)
    if (t.id == id) return t;
  throw ModelError("unknown tile id " + std::to_string(id));
}

const Tile& SystemState::tile(TileId id) const {
  for (const auto& t : tiles)
    if (t.id == id) return t;
  throw ModelError("unknown tile id " + std::to_string(id));
}

Tile* SystemState::find_tile(TileId id) {
  for (auto& t : tiles)
    if (t.id == id) return &t;
  return nullptr;
}

const ThreadSpec& SystemState::thread(const ThreadId& id) const {
  if (const ThreadSpec* t = find_thread(id)) return *t;
  throw ModelError("unknown thread id '" + id + "'");
}

const ThreadSpec* SystemState::find_thread(const ThreadId& id) const {
  for (const auto& t : threads)
    if (t.id == id) return &t;
  return nullptr;
}

std::set<TileId> SystemState::hosts_of(const ThreadId& id) const {
  const Assignment* a = mapping.find(id);
  return a ? a->tiles : std::set<TileId>{};
}

bool SystemState::replica_executing(const ThreadId& thread, TileId tile_id) const {
  if (halted.count(thread)) return false;
  const Assignment* a = mapping.find(thread);
  if (!a || !a->tiles.count(tile_id)) return false;
  const Tile* t = nullptr;
  for (const auto& tl : tiles)
    if (tl.id == tile_id) t = &tl;
  return t && t->in_service();
}

int SystemState::executing_replicas(const ThreadId& thread) const {
  int n = 0;
  for (TileId t : hosts_of(thread))
    if (replica_executing(thread, t)) ++n;
  return n;
}

Digest SystemState::replica_perturb(const ThreadId& thread, TileId tile) const {
  auto it = perturb.find(thread);
  if (it == perturb.end()) return 0;
  auto jt = it->second.find(tile);
  return jt == it->second.end() ? 0 : jt->second;
}

void SystemState::set_replica_perturb(const ThreadId& thread, TileId tile, Digest p) {
  if (p == 0)
    clear_replica_perturb(thread, tile);
  else
    perturb[thread][tile] = p;
}

void SystemState::clear_replica_perturb(const ThreadId& thread, TileId tile) {
  auto it = perturb.find(thread);
  if (it == perturb.end()) return;
  it->second.erase(tile);
  if (it->second.empty()) perturb.erase(it);
}

int replication_level(const SystemState& state, const ThreadId& thread) {
  if (!state.find_thread(thread)) throw ModelError("unknown thread id '" + thread + "'");
  int n = 0;
  for (TileId t : state.hosts_of(thread))
    if (state.tile(t).health != TileHealth::PermanentlyDefective) ++n;
  return n;
}

long long tile_load_up(const SystemState& state, TileId tile) {
  long long load = 0;
  for (const auto& [tid, a] : state.mapping.assignments)
    if (a.tiles.count(tile))
      load += static_cast<long long>(state.thread(tid).demand) * a.share_pct;
  return load;
}

long long tile_power_uw(const Tile& tile, long long load_up) {
  switch (tile.health) {
    case TileHealth::ClockGated:
    case TileHealth::PermanentlyDefective:
      return 0;
    case TileHealth::Reconfiguring:
      return 100'000;
    case TileHealth::Healthy:
    case TileHealth::Suspect:
      break;
  }
  // 0.1 W static + 0.25 W * freq * work/capacity_nominal; load_up is in
  // unit-percent and freq in percent, so the exact uW expression reduces to
  // 100000 + 25 * freq_pct * load_up / cap.
  return 100'000 + 25LL * tile.freq_pct * load_up / tile.capacity_nominal;
}

long long system_power_uw(const SystemState& state) {
  long long total = 0;
  for (const auto& t : state.tiles) total += tile_power_uw(t, tile_load_up(state, t.id));
  return total;
}

std::vector<std::string> mapping_violations(const SystemState& state) {
  std::vector<std::string> out;
  const SystemMapping& m = state.mapping;

  for (const auto& [tid, a] : m.assignments) {
    if (!state.find_thread(tid)) {
      out.push_back("assignment for undeclared thread '" + tid + "'");
      continue;
    }
    const ThreadSpec& spec = state.thread(tid);
    if (a.mode == Mode::NMR) {
      if (static_cast<int>(a.tiles.size()) < 4)
        out.push_back("thread '" + tid + "' in NMR with fewer than 4 replicas");
    } else {
      int want = replication_factor(a.mode, 0);
      if (static_cast<int>(a.tiles.size()) != want)
        out.push_back("thread '" + tid + "' mode " + to_string(a.mode) + " has " +
                      std::to_string(a.tiles.size()) + " replicas, wants " + std::to_string(want));
    }
    if (a.share_pct < 25 || a.share_pct > 100 || a.share_pct % 25 != 0)
      out.push_back("thread '" + tid + "' has invalid time share " + std::to_string(a.share_pct));
    if (spec.rt_guarantee && a.mode != Mode::Descheduled && a.share_pct != 100)
      out.push_back("rt-guaranteed thread '" + tid + "' is time-share reduced");
    for (TileId t : a.tiles) {
      const Tile* tl = nullptr;
      for (const auto& cand : state.tiles)
        if (cand.id == t) tl = &cand;
      if (!tl) {
        out.push_back("thread '" + tid + "' assigned to undeclared tile " + std::to_string(t));
        continue;
      }
      if (!tl->in_service())
        out.push_back("thread '" + tid + "' hosted on out-of-service tile " + std::to_string(t) +
                      " (" + to_string(tl->health) + ")");
      if (!m.active_tiles.count(t))
        out.push_back("thread '" + tid + "' hosted on inactive tile " + std::to_string(t));
    }
  }

  for (const auto& t : state.tiles) {
    long long load = 0;
    for (const auto& [tid, a] : m.assignments)
      if (a.tiles.count(t.id) && state.find_thread(tid))
        load += static_cast<long long>(state.thread(tid).demand) * a.share_pct;
    if (load > 0 && load > effective_capacity_up(t))
      out.push_back("tile " + std::to_string(t.id) + " overloaded: " + std::to_string(load) +
                    " > " + std::to_string(effective_capacity_up(t)) + " unit-pct");
    if (t.health == TileHealth::ClockGated && m.active_tiles.count(t.id))
      out.push_back("tile " + std::to_string(t.id) + " is gated but listed active");
  }
  return out;
}

}  // namespace lspool
