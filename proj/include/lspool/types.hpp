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

#include <compare>
#include <string>
#include <vector>

#include "lspool/common.hpp"

namespace lspool {

/// Criticality classes, totally ordered Essential > High > Medium > Low.
enum class Criticality : int { Low = 0, Medium = 1, High = 2, Essential = 3 };

constexpr auto operator<=>(Criticality a, Criticality b) {
  return static_cast<int>(a) <=> static_cast<int>(b);
}

/// Rank used as the objective weight (Low=1 .. Essential=4).
constexpr int criticality_rank(Criticality c) { return static_cast<int>(c) + 1; }

const char* to_string(Criticality c);
Criticality criticality_from_string(const std::string& s);

/// Execution modes ordered by replication factor. NMR replicates on
/// nmr_n >= 4 tiles (fixed per scenario), TMR on 3, DMR on 2, Separate runs a
/// single unvoted instance and Descheduled runs nothing.
enum class Mode : int { Descheduled = 0, Separate = 1, DMR = 2, TMR = 3, NMR = 4 };

/// Replication factor of a mode; nmr_n only matters for NMR.
constexpr int replication_factor(Mode m, int nmr_n) {
  switch (m) {
    case Mode::NMR: return nmr_n;
    case Mode::TMR: return 3;
    case Mode::DMR: return 2;
    case Mode::Separate: return 1;
    case Mode::Descheduled: return 0;
  }
  return 0;
}

const char* to_string(Mode m);
Mode mode_from_string(const std::string& s);

/// A critical application thread as declared by the scenario.
struct ThreadSpec {
  ThreadId id;
  Criticality criticality = Criticality::Low;
  /// Processing capacity required per checkpoint period at nominal frequency,
  /// in abstract capacity units.
  int demand = 1;
  /// true = fixed processing time required (real-time); false = sporadic or
  /// background work whose time share may be reduced.
  bool rt_guarantee = true;
  /// How long a replica may defer a checkpoint to reach a viable state.
  SimTime checkpoint_delay_max_us = 0;

  bool operator==(const ThreadSpec&) const = default;
};

enum class TileHealth { Healthy, Suspect, Reconfiguring, PermanentlyDefective, ClockGated };

const char* to_string(TileHealth h);

/// A processor compartment: core, local interconnect and peripherals.
/// The unit of replication, reconfiguration and failure.
struct Tile {
  TileId id = 0;
  TileHealth health = TileHealth::Healthy;
  /// Capacity units per checkpoint period at frequency level 1.0.
  int capacity_nominal = 100;
  /// Frequency multiplier in integer percent (100 = nominal). Always one of
  /// the scenario's discrete levels.
  int freq_pct = 100;
  /// Faults attributed to this tile since the last Stage-2 reset.
  int fault_counter = 0;
  /// Which configuration variant is currently loaded.
  int variant_index = 0;
  /// Number of differently routed configuration variants available.
  int variants_available = 3;

  /// A tile in service keeps producing checksums; Suspect tiles stay in
  /// service until Stage 2 pulls them out.
  bool in_service() const {
    return health == TileHealth::Healthy || health == TileHealth::Suspect;
  }
};

/// capacity_nominal * freq_pct while the tile is in service, else 0.
/// Loads compare against this in capacity-unit-percent, keeping the
/// arithmetic exact.
inline long long effective_capacity_up(const Tile& t) {
  if (!t.in_service()) return 0;
  return static_cast<long long>(t.capacity_nominal) * t.freq_pct;
}

/// Same quantity in whole capacity units (truncating), the spec-facing view.
inline long long effective_capacity(const Tile& t) { return effective_capacity_up(t) / 100; }

}  // namespace lspool
