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

#include "lspool/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace lspool {

using nlohmann::json;

const char* to_string(FaultKind k) {
  switch (k) {
    case FaultKind::TransientState: return "TransientState";
    case FaultKind::TransientConfig: return "TransientConfig";
    case FaultKind::PermanentLogic: return "PermanentLogic";
    case FaultKind::PermanentMemory: return "PermanentMemory";
    case FaultKind::MBU: return "MBU";
    case FaultKind::EccSyndrome: return "EccSyndrome";
  }
  return "?";
}

FaultKind fault_kind_from_string(const std::string& s) {
  if (s == "TransientState") return FaultKind::TransientState;
  if (s == "TransientConfig") return FaultKind::TransientConfig;
  if (s == "PermanentLogic") return FaultKind::PermanentLogic;
  if (s == "PermanentMemory") return FaultKind::PermanentMemory;
  if (s == "MBU") return FaultKind::MBU;
  if (s == "EccSyndrome") return FaultKind::EccSyndrome;
  throw ScenarioError("faults.kind", "unknown fault kind '" + s + "'");
}

const char* to_string(EccRegion r) {
  switch (r) {
    case EccRegion::MainMemory: return "main_memory";
    case EccRegion::TileLocal: return "tile_local";
    case EccRegion::ValidationMemory: return "validation_memory";
  }
  return "?";
}

namespace {

EccRegion ecc_region_from_string(const std::string& s) {
  if (s == "main_memory") return EccRegion::MainMemory;
  if (s == "tile_local") return EccRegion::TileLocal;
  if (s == "validation_memory") return EccRegion::ValidationMemory;
  throw ScenarioError("faults.region", "unknown ECC region '" + s + "'");
}

json profile_to_json(const PerformanceProfile& p) {
  json j;
  j["name"] = p.name;
  json allowed = json::object();
  for (const auto& [cls, modes] : p.allowed) {
    json list = json::array();
    for (Mode m : modes) list.push_back(to_string(m));
    allowed[to_string(cls)] = list;
  }
  j["allowed"] = allowed;
  if (p.power_budget_mw) j["power_budget_mw"] = *p.power_budget_mw;
  j["nmr_n"] = p.nmr_n;
  return j;
}

PerformanceProfile profile_from_json(const json& j) {
  PerformanceProfile p;
  p.name = j.value("name", "custom");
  if (!j.contains("allowed")) throw ScenarioError("profile.allowed", "missing");
  for (auto it = j.at("allowed").begin(); it != j.at("allowed").end(); ++it) {
    Criticality cls = criticality_from_string(it.key());
    std::vector<Mode> modes;
    for (const auto& m : it.value()) modes.push_back(mode_from_string(m.get<std::string>()));
    p.allowed[cls] = std::move(modes);
  }
  if (j.contains("power_budget_mw")) p.power_budget_mw = j.at("power_budget_mw").get<long long>();
  p.nmr_n = j.value("nmr_n", 4);
  return p;
}

template <typename T>
T require(const json& j, const std::string& field) {
  if (!j.contains(field)) throw ScenarioError(field, "missing required field");
  try {
    return j.at(field).get<T>();
  } catch (const json::exception& e) {
    throw ScenarioError(field, e.what());
  }
}

}  // namespace

void ScenarioConfig::validate() const {
  if (schema != 1) throw ScenarioError("schema", "unsupported schema version");
  if (checkpoint_period_us < 50 * kUsPerMs)
    throw ScenarioError("checkpoint_period_us",
                        "must be at least 50000 (50 ms, the 20 Hz stress floor)");
  if (duration_us <= 0) throw ScenarioError("duration_us", "must be > 0");
  if (tile_count < 1) throw ScenarioError("tiles.count", "must be >= 1");
  if (tile_capacity <= 0) throw ScenarioError("tiles.capacity", "must be > 0");
  if (tile_variants < 1) throw ScenarioError("tiles.variants", "must be >= 1");
  if (freq_levels_pct.empty()) throw ScenarioError("freq_levels_pct", "must be non-empty");
  if (!std::is_sorted(freq_levels_pct.begin(), freq_levels_pct.end()))
    throw ScenarioError("freq_levels_pct", "must be ascending");
  for (int f : freq_levels_pct)
    if (f <= 0) throw ScenarioError("freq_levels_pct", "levels must be > 0");
  if (!std::count(freq_levels_pct.begin(), freq_levels_pct.end(), 100))
    throw ScenarioError("freq_levels_pct", "must contain the nominal level 100");
  for (const auto& o : tile_overrides) {
    if (o.id < 0 || o.id >= tile_count)
      throw ScenarioError("tiles.overrides", "tile id out of range");
    if (o.capacity && *o.capacity <= 0)
      throw ScenarioError("tiles.overrides.capacity", "must be > 0");
    if (o.variants && *o.variants < 1)
      throw ScenarioError("tiles.overrides.variants", "must be >= 1");
  }

  if (!floorplan_order.empty()) {
    if (static_cast<int>(floorplan_order.size()) != tile_count)
      throw ScenarioError("floorplan_order", "must list every tile exactly once");
    std::set<TileId> seen;
    for (TileId t : floorplan_order) {
      if (t < 0 || t >= tile_count || !seen.insert(t).second)
        throw ScenarioError("floorplan_order", "must be a permutation of the tile ids");
    }
  }

  std::set<ThreadId> ids;
  for (const auto& t : threads) {
    if (t.id.empty()) throw ScenarioError("threads.id", "must be non-empty");
    if (!ids.insert(t.id).second)
      throw ScenarioError("threads.id", "duplicate thread id '" + t.id + "'");
    if (t.demand <= 0) throw ScenarioError("threads.demand", "must be > 0 for '" + t.id + "'");
    if (t.checkpoint_delay_max_us < 0)
      throw ScenarioError("threads.checkpoint_delay_max_us", "must be >= 0");
    if (t.checkpoint_delay_max_us >= checkpoint_period_us)
      throw ScenarioError("threads.checkpoint_delay_max_us",
                          "must be below the checkpoint period for '" + t.id + "'");
  }

  profile.validate();

  for (size_t i = 0; i < faults.size(); ++i) {
    const FaultEvent& f = faults[i];
    const std::string where = "faults[" + std::to_string(i) + "]";
    if (f.at_us < 0 || f.at_us > duration_us)
      throw ScenarioError(where + ".at_us", "outside the simulated window");
    if (f.kind == FaultKind::MBU) {
      if (f.span.size() < 2) throw ScenarioError(where + ".span", "MBU span must list >= 2 tiles");
      // position in the floorplan ordering (tile-id line graph by default)
      auto floor_pos = [&](TileId t) {
        if (floorplan_order.empty()) return t;
        for (size_t k = 0; k < floorplan_order.size(); ++k)
          if (floorplan_order[k] == t) return static_cast<TileId>(k);
        return TileId{-1};
      };
      for (size_t k = 0; k < f.span.size(); ++k) {
        if (f.span[k] < 0 || f.span[k] >= tile_count)
          throw ScenarioError(where + ".span", "tile id out of range");
        if (k > 0 && floor_pos(f.span[k]) != floor_pos(f.span[k - 1]) + 1)
          throw ScenarioError(where + ".span",
                              "MBU may only span adjacent tiles in floorplan order");
      }
    } else if (f.kind == FaultKind::EccSyndrome) {
      if (f.region != EccRegion::MainMemory && (f.tile < 0 || f.tile >= tile_count))
        throw ScenarioError(where + ".tile", "tile id out of range");
    } else {
      if (f.tile < 0 || f.tile >= tile_count)
        throw ScenarioError(where + ".tile", "tile id out of range");
      for (int v : f.affected_variants)
        if (v < 0) throw ScenarioError(where + ".affected_variants", "variant index must be >= 0");
    }
  }

  double total_rate = 0;
  for (const auto& [kind, rate] : fault_rates_per_hour) {
    if (rate < 0) throw ScenarioError("fault_rates_per_hour", "rates must be >= 0");
    total_rate += rate;
  }
  if (total_rate > 0 && !rng_seed)
    throw ScenarioError("rng_seed", "required when stochastic fault rates are set");

  for (const auto& pc : profile_changes) {
    if (pc.at_us <= 0 || pc.at_us > duration_us)
      throw ScenarioError("profile_changes.at_us", "outside the simulated window");
    if (!find_builtin_profile(pc.profile))
      throw ScenarioError("profile_changes.profile", "unknown profile '" + pc.profile + "'");
  }

  if (latencies.partial_reconfig_us <= 0)
    throw ScenarioError("latencies.partial_reconfig_us", "must be > 0");
  if (latencies.full_reboot_us <= 0)
    throw ScenarioError("latencies.full_reboot_us", "must be > 0");
  if (latencies.strategy_recompute_us < 0)
    throw ScenarioError("latencies.strategy_recompute_us", "must be >= 0");
  if (latencies.sync_cost_units < 0)
    throw ScenarioError("latencies.sync_cost_units", "must be >= 0");
  if (attempts_per_variant < 1) throw ScenarioError("attempts_per_variant", "must be >= 1");
  if (dissent_window < 1) throw ScenarioError("dissent_window", "must be >= 1");
  if (dissent_threshold < 1) throw ScenarioError("dissent_threshold", "must be >= 1");
}

std::string ScenarioConfig::to_json() const {
  json j;
  j["schema"] = schema;
  j["name"] = name;
  j["checkpoint_period_us"] = checkpoint_period_us;
  j["duration_us"] = duration_us;
  if (rng_seed) j["rng_seed"] = *rng_seed;

  json tiles;
  tiles["count"] = tile_count;
  tiles["capacity"] = tile_capacity;
  tiles["variants"] = tile_variants;
  if (!tile_overrides.empty()) {
    json ov = json::array();
    for (const auto& o : tile_overrides) {
      json e;
      e["id"] = o.id;
      if (o.capacity) e["capacity"] = *o.capacity;
      if (o.variants) e["variants"] = *o.variants;
      ov.push_back(e);
    }
    tiles["overrides"] = ov;
  }
  j["tiles"] = tiles;
  j["freq_levels_pct"] = freq_levels_pct;
  if (!floorplan_order.empty()) j["floorplan_order"] = floorplan_order;

  json ths = json::array();
  for (const auto& t : threads) {
    json e;
    e["id"] = t.id;
    e["criticality"] = to_string(t.criticality);
    e["demand"] = t.demand;
    e["rt_guarantee"] = t.rt_guarantee;
    e["checkpoint_delay_max_us"] = t.checkpoint_delay_max_us;
    ths.push_back(e);
  }
  j["threads"] = ths;

  if (profile_ref)
    j["profile"] = *profile_ref;
  else
    j["profile"] = profile_to_json(profile);

  if (!faults.empty()) {
    json fs = json::array();
    for (const auto& f : faults) {
      json e;
      e["at_us"] = f.at_us;
      e["kind"] = to_string(f.kind);
      if (f.kind == FaultKind::MBU) {
        e["span"] = f.span;
      } else if (f.kind == FaultKind::EccSyndrome) {
        e["region"] = to_string(f.region);
        if (f.region != EccRegion::MainMemory) e["tile"] = f.tile;
      } else {
        e["tile"] = f.tile;
        if (!f.affected_variants.empty())
          e["affected_variants"] = std::vector<int>(f.affected_variants.begin(),
                                                    f.affected_variants.end());
      }
      fs.push_back(e);
    }
    j["faults"] = fs;
  }
  if (!fault_rates_per_hour.empty()) {
    json rates;
    for (const auto& [kind, rate] : fault_rates_per_hour) rates[to_string(kind)] = rate;
    j["fault_rates_per_hour"] = rates;
  }
  if (!profile_changes.empty()) {
    json pcs = json::array();
    for (const auto& pc : profile_changes) {
      json e;
      e["at_us"] = pc.at_us;
      e["profile"] = pc.profile;
      pcs.push_back(e);
    }
    j["profile_changes"] = pcs;
  }

  json lat;
  lat["partial_reconfig_us"] = latencies.partial_reconfig_us;
  lat["full_reboot_us"] = latencies.full_reboot_us;
  lat["strategy_recompute_us"] = latencies.strategy_recompute_us;
  lat["sync_cost_units"] = latencies.sync_cost_units;
  j["latencies"] = lat;
  j["attempts_per_variant"] = attempts_per_variant;
  j["dissent_window"] = dissent_window;
  j["dissent_threshold"] = dissent_threshold;
  return j.dump(2);
}

ScenarioConfig ScenarioConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ScenarioError("<document>", std::string("not valid JSON: ") + e.what());
  }
  ScenarioConfig c;
  c.schema = require<int>(j, "schema");
  c.name = j.value("name", "");
  c.checkpoint_period_us = require<SimTime>(j, "checkpoint_period_us");
  c.duration_us = require<SimTime>(j, "duration_us");
  if (j.contains("rng_seed")) c.rng_seed = j.at("rng_seed").get<std::uint64_t>();

  if (!j.contains("tiles")) throw ScenarioError("tiles", "missing required field");
  const json& tiles = j.at("tiles");
  c.tile_count = require<int>(tiles, "count");
  c.tile_capacity = tiles.value("capacity", 100);
  c.tile_variants = tiles.value("variants", 3);
  if (tiles.contains("overrides")) {
    for (const auto& e : tiles.at("overrides")) {
      TileOverride o;
      o.id = require<int>(e, "id");
      if (e.contains("capacity")) o.capacity = e.at("capacity").get<int>();
      if (e.contains("variants")) o.variants = e.at("variants").get<int>();
      c.tile_overrides.push_back(o);
    }
  }
  if (j.contains("freq_levels_pct"))
    c.freq_levels_pct = j.at("freq_levels_pct").get<std::vector<int>>();
  if (j.contains("floorplan_order"))
    c.floorplan_order = j.at("floorplan_order").get<std::vector<TileId>>();

  if (!j.contains("threads")) throw ScenarioError("threads", "missing required field");
  for (const auto& e : j.at("threads")) {
    ThreadSpec t;
    t.id = require<std::string>(e, "id");
    t.criticality = criticality_from_string(require<std::string>(e, "criticality"));
    t.demand = require<int>(e, "demand");
    t.rt_guarantee = e.value("rt_guarantee", true);
    t.checkpoint_delay_max_us = e.value("checkpoint_delay_max_us", SimTime{0});
    c.threads.push_back(std::move(t));
  }

  if (!j.contains("profile")) throw ScenarioError("profile", "missing required field");
  if (j.at("profile").is_string()) {
    std::string name = j.at("profile").get<std::string>();
    const PerformanceProfile* p = find_builtin_profile(name);
    if (!p) throw ScenarioError("profile", "unknown built-in profile '" + name + "'");
    c.profile_ref = name;
    c.profile = *p;
  } else {
    c.profile = profile_from_json(j.at("profile"));
  }

  if (j.contains("faults")) {
    for (const auto& e : j.at("faults")) {
      FaultEvent f;
      f.at_us = require<SimTime>(e, "at_us");
      f.kind = fault_kind_from_string(require<std::string>(e, "kind"));
      if (f.kind == FaultKind::MBU) {
        f.span = require<std::vector<TileId>>(e, "span");
        f.tile = f.span.empty() ? -1 : f.span.front();
      } else if (f.kind == FaultKind::EccSyndrome) {
        f.region = ecc_region_from_string(require<std::string>(e, "region"));
        if (f.region != EccRegion::MainMemory) f.tile = require<int>(e, "tile");
      } else {
        f.tile = require<int>(e, "tile");
        if (e.contains("affected_variants"))
          for (int v : e.at("affected_variants").get<std::vector<int>>())
            f.affected_variants.insert(v);
      }
      c.faults.push_back(std::move(f));
    }
  }
  if (j.contains("fault_rates_per_hour")) {
    for (auto it = j.at("fault_rates_per_hour").begin(); it != j.at("fault_rates_per_hour").end();
         ++it)
      c.fault_rates_per_hour[fault_kind_from_string(it.key())] = it.value().get<double>();
  }
  if (j.contains("profile_changes")) {
    for (const auto& e : j.at("profile_changes")) {
      ProfileChange pc;
      pc.at_us = require<SimTime>(e, "at_us");
      pc.profile = require<std::string>(e, "profile");
      c.profile_changes.push_back(std::move(pc));
    }
  }
  if (j.contains("latencies")) {
    const json& lat = j.at("latencies");
    c.latencies.partial_reconfig_us =
        lat.value("partial_reconfig_us", c.latencies.partial_reconfig_us);
    c.latencies.full_reboot_us = lat.value("full_reboot_us", c.latencies.full_reboot_us);
    c.latencies.strategy_recompute_us =
        lat.value("strategy_recompute_us", c.latencies.strategy_recompute_us);
    c.latencies.sync_cost_units = lat.value("sync_cost_units", c.latencies.sync_cost_units);
  }
  c.attempts_per_variant = j.value("attempts_per_variant", 2);
  c.dissent_window = j.value("dissent_window", 10);
  c.dissent_threshold = j.value("dissent_threshold", 3);

  c.validate();
  return c;
}

ScenarioConfig ScenarioConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("<file>", "cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

std::vector<Tile> ScenarioConfig::build_tiles() const {
  std::vector<Tile> tiles;
  for (int i = 0; i < tile_count; ++i) {
    Tile t;
    t.id = i;
    t.capacity_nominal = tile_capacity;
    t.variants_available = tile_variants;
    tiles.push_back(t);
  }
  for (const auto& o : tile_overrides) {
    if (o.capacity) tiles[o.id].capacity_nominal = *o.capacity;
    if (o.variants) tiles[o.id].variants_available = *o.variants;
  }
  return tiles;
}

}  // namespace lspool
