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
#include <set>
#include <vector>

#include "lspool/mapping.hpp"
#include "lspool/metrics.hpp"
#include "lspool/types.hpp"
#include "lspool/validation_memory.hpp"

namespace lspool {

/// Global snapshot of the tiled MPSoC: static declarations, the current
/// thread-to-tile mapping, per-tile validation memories, and the modeled
/// dynamic state of every replica. Plain value type; engine instances never
/// share one.
struct SystemState {
  SimTime time = 0;
  Epoch epoch = 0;
  std::vector<Tile> tiles;
  std::vector<ThreadSpec> threads;
  SystemMapping mapping;
  std::map<TileId, ValidationMemory> validation;

  /// Modeled state-vector perturbation per replica; absent or zero means the
  /// replica carries the canonical state. A corrupted replica's checksum is
  /// canonical ^ perturbation.
  std::map<ThreadId, std::map<TileId, Digest>> perturb;

  /// Threads halted by an unresolved no-majority split; they produce no
  /// checksums and accrue downtime until the supervisor restores them.
  std::set<ThreadId> halted;

  MetricsReport metrics;

  Tile& tile(TileId id);
  const Tile& tile(TileId id) const;
  Tile* find_tile(TileId id);
  const ThreadSpec& thread(const ThreadId& id) const;
  const ThreadSpec* find_thread(const ThreadId& id) const;

  /// Tiles currently hosting a replica of the thread, in service or not.
  std::set<TileId> hosts_of(const ThreadId& id) const;

  /// Whether the replica of `thread` on `tile` executes this period:
  /// assigned, tile in service, thread not halted.
  bool replica_executing(const ThreadId& thread, TileId tile) const;

  /// Count of executing replicas (drives downtime accounting).
  int executing_replicas(const ThreadId& thread) const;

  Digest replica_perturb(const ThreadId& thread, TileId tile) const;
  void set_replica_perturb(const ThreadId& thread, TileId tile, Digest p);
  void clear_replica_perturb(const ThreadId& thread, TileId tile);
};

/// Number of distinct non-defective tiles currently hosting a replica.
/// Throws ModelError for an undeclared thread id.
int replication_level(const SystemState& state, const ThreadId& thread);

/// Load assigned to one tile in capacity-unit-percent (sum of
/// demand * share_pct over its replicas).
long long tile_load_up(const SystemState& state, TileId tile);

/// Modeled power draw of one tile in microwatts:
/// P_static + P_dyn * freq * (work / nominal capacity), with
/// P_static = 0.1 W and P_dyn = 0.25 W. Gated and defective tiles draw 0,
/// a reconfiguring tile draws static power only.
long long tile_power_uw(const Tile& tile, long long load_up);

/// Total system power in microwatts for the given mapping.
long long system_power_uw(const SystemState& state);

/// Mapping invariant check; returns human-readable violations (empty = ok).
/// Checks id validity, replica counts vs mode, per-tile capacity, share
/// bounds and rt-guarantee share protection, hosting-tile service state,
/// and active-tile/gating consistency.
std::vector<std::string> mapping_violations(const SystemState& state);

}  // namespace lspool
