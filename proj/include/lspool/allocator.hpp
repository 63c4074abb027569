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
#include <vector>

#include "lspool/profiles.hpp"
#include "lspool/system_state.hpp"
#include "lspool/trace.hpp"

namespace lspool {

/// Greedy mapping heuristic. Threads are mapped strongest-mode-first in
/// (criticality desc, demand desc) order; when capacity or the power budget
/// is exceeded, execution modes are reduced starting with the last mapped and
/// therefore lowest-criticality thread, then time shares of sporadic threads
/// are cut, then non-essential threads are descheduled. A final pass
/// re-traverses the list undoing reductions greedily while the mapping stays
/// feasible.
struct MapResult {
  bool feasible = false;
  SystemMapping mapping;
  /// Diagnostic on infeasibility: the thread that could not be satisfied.
  ThreadId first_unsatisfiable;
};

MapResult map_threads(const std::vector<ThreadSpec>& threads, const std::vector<Tile>& tiles,
                      const PerformanceProfile& profile);

/// Repack replicas onto as few tiles as possible (replicas of one thread stay
/// on distinct tiles); surplus tiles are dropped from active_tiles so the
/// caller can clock-gate them. Exact on small instances, first-fit-decreasing
/// beyond that. Intended for profiles with a power budget.
SystemMapping minimize_active_tiles(const std::vector<ThreadSpec>& threads,
                                    const std::vector<Tile>& tiles,
                                    const SystemMapping& mapping);

/// Modeled energy rate of a planned mapping in uW. Tiles outside
/// active_tiles draw nothing; active tiles draw static power plus the
/// work-proportional term.
long long mapping_power_uw(const std::vector<ThreadSpec>& threads,
                           const std::vector<Tile>& tiles, const SystemMapping& mapping);

/// Objective weight of a criticality class. Classes are not fungible:
/// weights grow geometrically so that no amount of lower-criticality
/// replication outweighs one step for a higher class.
constexpr long long criticality_weight(Criticality c) {
  return 1LL << (6 * static_cast<int>(c));
}

/// Primary mapping objective: sum over threads of
/// criticality_weight * replication_factor, criticality-dominant by
/// construction. The exhaustive search maximizes (objective, delivered
/// share) lexicographically.
long long mapping_objective(const std::vector<ThreadSpec>& threads, const SystemMapping& mapping);

/// Thrown when an instance exceeds the guarded oracle size.
class OracleTooLarge : public ModelError {
 public:
  using ModelError::ModelError;
};

struct OracleResult {
  bool feasible = false;
  SystemMapping mapping;
  long long objective = 0;
};

/// Exhaustive test oracle: enumerates mode choices from the allowed lists
/// (plus descheduling for non-essential threads and time-share reduction for
/// sporadic ones) with exact replica packing, and returns a mapping
/// maximizing the objective. Guarded to |tiles| <= 8 and |threads| <= 6;
/// throws OracleTooLarge beyond that. Test/diagnostic use only.
OracleResult brute_force_map(const std::vector<ThreadSpec>& threads,
                             const std::vector<Tile>& tiles, const PerformanceProfile& profile);

/// True when some placement gives every Essential thread at least its weakest
/// allowed mode (all other threads may be sacrificed entirely). Cheap subcase
/// of the oracle used by the strategy-soundness checks.
bool essential_feasible(const std::vector<ThreadSpec>& threads, const std::vector<Tile>& tiles,
                        const PerformanceProfile& profile);

/// Reduction-order audit for a heuristic output: a higher-criticality thread
/// may only sit below its strongest allowed mode if it cannot be strengthened
/// one step even with every strictly-lower-criticality thread removed.
/// Returns offending thread ids (empty = monotone).
std::vector<ThreadId> criticality_monotonicity_violations(
    const std::vector<ThreadSpec>& threads, const std::vector<Tile>& tiles,
    const PerformanceProfile& profile, const SystemMapping& mapping);

struct StrategyConfig {
  /// Discrete frequency levels in percent, ascending, containing 100.
  std::vector<int> freq_levels_pct{50, 100, 125, 150};
};

/// Chooses the recovery-strategy kind the profile prefers for a given failed
/// tile, honoring feasibility: Speed reaches for frequency increases,
/// Energy for time-share reduction (never a frequency increase that would
/// bust the budget), Robustness and Function for low-criticality pruning.
StrategyKind select_strategy_kind(const SystemState& state, const PerformanceProfile& profile,
                                  TileId failed_tile, const StrategyConfig& cfg);

/// Precompute the replacement strategy for one tile's permanent failure.
ReplacementStrategy plan_replacement(const SystemState& state, const PerformanceProfile& profile,
                                     TileId failed_tile, const StrategyConfig& cfg);

/// Precompute strategies for every non-defective tile.
std::map<TileId, ReplacementStrategy> precompute_replacement_strategies(
    const SystemState& state, const PerformanceProfile& profile, const StrategyConfig& cfg);

/// Apply a precomputed strategy after failed_tile died: the delta is applied
/// atomically, migrated replicas adopt the majority state, and the new
/// mapping is returned. An infeasible strategy degrades to dropping the dead
/// replicas, descheduling lowest-criticality threads until the mapping is
/// valid, and remapping with the heuristic when Essential or High threads
/// lost their allowed modes.
SystemMapping apply_replacement_strategy(SystemState& state, TileId failed_tile,
                                         const ReplacementStrategy& strategy,
                                         const PerformanceProfile& profile, Trace& trace);

}  // namespace lspool
