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

#include <optional>
#include <set>
#include <vector>

#include "lspool/system_state.hpp"
#include "lspool/trace.hpp"

namespace lspool {

/// What actually broke. Hidden from Stages 1-3: only the injection engine
/// and the test oracle see it; the supervisor observes behavior.
enum class FaultNature { TransientState, TransientConfig, PermanentLogic, PermanentMemory };

const char* to_string(FaultNature n);

struct FaultGroundTruth {
  TileId tile = -1;
  FaultNature nature = FaultNature::TransientState;
  /// Configuration variants that cannot mask the defect. Empty for
  /// transients; every variant for memory faults (off-fabric damage).
  std::set<int> affected_variants;

  /// Whether this defect corrupts execution under the loaded variant.
  bool corrupts(int variant) const {
    switch (nature) {
      case FaultNature::TransientState: return false;  // one-shot, not persistent
      case FaultNature::TransientConfig: return true;
      case FaultNature::PermanentLogic: return affected_variants.count(variant) > 0;
      case FaultNature::PermanentMemory: return true;
    }
    return false;
  }
};

/// Supervisor repair ladder for one tile's fault episode:
/// partial reconfiguration -> partition validation -> self-test ->
/// variant retry -> full reconfiguration -> escalation.
enum class LadderStep { PartialReconfig, Validate, SelfTest, VariantRetry, FullReconfig, Escalated };

const char* to_string(LadderStep s);

struct RepairLadderState {
  TileId tile = -1;
  LadderStep step = LadderStep::PartialReconfig;
  int attempts_on_variant = 0;
  int variants_tried = 0;
};

struct RecoveryConfig {
  SimTime partial_reconfig_us = 200 * kUsPerMs;
  SimTime full_reboot_us = 1500 * kUsPerMs;
  int attempts_per_variant = 2;
};

enum class RepairStart { Started, NoOpDefective };

/// Take the tile out of service for partial reconfiguration. The rest of the
/// system keeps running; the caller schedules completion after the
/// reconfiguration latency.
RepairStart attempt_partial_reconfiguration(SystemState& state, TileId tile, Trace& trace);

/// Partition validation plus tile self-test after a reconfiguration
/// completed. Pass iff no remaining ground truth corrupts: transient-state
/// damage never fails validation, permanent logic fails while the loaded
/// variant cannot mask it, memory damage always fails. On pass the tile
/// returns to service with its fault counter reset.
bool validate_and_selftest(SystemState& state, TileId tile,
                           const std::vector<FaultGroundTruth>& remaining_truths, Trace& trace);

enum class LadderAction { RetrySameVariant, SwitchVariant, FullReconfig };

/// Advance the ladder after a failed validation. Mutates the ladder
/// bookkeeping and, for SwitchVariant, loads the next configuration variant.
LadderAction advance_ladder(SystemState& state, RepairLadderState& ladder,
                            const RecoveryConfig& cfg, Trace& trace);

/// Ladder-step bound for one episode: every episode terminates in Healthy or
/// PermanentlyDefective within this many partial attempts plus one reboot.
inline int ladder_bound(const Tile& tile, const RecoveryConfig& cfg) {
  return cfg.attempts_per_variant * tile.variants_available + 1;
}

/// Put every non-defective tile into Reconfiguring for a full reboot.
void begin_full_reconfiguration(SystemState& state, Trace& trace);

/// Mark the tile permanently defective. The caller invokes the allocator's
/// replacement strategy at the following checkpoint boundary.
void escalate_to_stage3(SystemState& state, TileId tile, Trace& trace);

}  // namespace lspool
