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

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lspool/profiles.hpp"
#include "lspool/recovery.hpp"
#include "lspool/types.hpp"

namespace lspool {

/// Scenario validation failure; carries the offending field path.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class FaultKind {
  TransientState,
  TransientConfig,
  PermanentLogic,
  PermanentMemory,
  MBU,
  EccSyndrome,
};

const char* to_string(FaultKind k);
FaultKind fault_kind_from_string(const std::string& s);

enum class EccRegion { MainMemory, TileLocal, ValidationMemory };

const char* to_string(EccRegion r);

/// One injected fault stimulus.
struct FaultEvent {
  SimTime at_us = 0;
  FaultKind kind = FaultKind::TransientState;
  /// Target tile; unused for main-memory ECC syndromes.
  TileId tile = -1;
  /// Variants that cannot mask the defect (permanent-logic faults).
  std::set<int> affected_variants;
  /// Adjacent tiles hit by a multi-bit upset (size >= 2).
  std::vector<TileId> span;
  EccRegion region = EccRegion::MainMemory;
  /// Whether this event came from the seeded stochastic process.
  bool seed_derived = false;

  bool operator==(const FaultEvent&) const = default;
};

struct ScenarioLatencies {
  SimTime partial_reconfig_us = 200 * kUsPerMs;
  SimTime full_reboot_us = 1500 * kUsPerMs;
  SimTime strategy_recompute_us = 100 * kUsPerMs;
  int sync_cost_units = 5;

  bool operator==(const ScenarioLatencies&) const = default;
};

struct TileOverride {
  TileId id = 0;
  std::optional<int> capacity;
  std::optional<int> variants;

  bool operator==(const TileOverride&) const = default;
};

struct ProfileChange {
  SimTime at_us = 0;
  std::string profile;

  bool operator==(const ProfileChange&) const = default;
};

/// Parsed scenario. Serializes to/from versioned JSON (schema 1).
struct ScenarioConfig {
  int schema = 1;
  std::string name;
  SimTime checkpoint_period_us = kUsPerSecond;
  SimTime duration_us = 10 * kUsPerSecond;
  std::optional<std::uint64_t> rng_seed;

  int tile_count = 6;
  int tile_capacity = 100;
  int tile_variants = 3;
  std::vector<TileOverride> tile_overrides;
  std::vector<int> freq_levels_pct{50, 100, 125, 150};
  /// Floorplan ordering for MBU adjacency; empty = tile-id line graph.
  std::vector<TileId> floorplan_order;

  std::vector<ThreadSpec> threads;

  /// Set when the profile was given by name; the resolved profile is always
  /// in `profile`.
  std::optional<std::string> profile_ref;
  PerformanceProfile profile;

  std::vector<FaultEvent> faults;
  std::map<FaultKind, double> fault_rates_per_hour;
  std::vector<ProfileChange> profile_changes;

  ScenarioLatencies latencies;
  int attempts_per_variant = 2;
  int dissent_window = 10;
  int dissent_threshold = 3;

  bool operator==(const ScenarioConfig&) const = default;

  /// Throws ScenarioError naming the offending field.
  void validate() const;

  std::string to_json() const;
  static ScenarioConfig from_json(const std::string& text);
  static ScenarioConfig load_file(const std::string& path);

  std::vector<Tile> build_tiles() const;
};

}  // namespace lspool
