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

#include "lspool/recovery.hpp"

namespace lspool {

const char* to_string(FaultNature n) {
  switch (n) {
    case FaultNature::TransientState: return "TransientState";
    case FaultNature::TransientConfig: return "TransientConfig";
    case FaultNature::PermanentLogic: return "PermanentLogic";
    case FaultNature::PermanentMemory: return "PermanentMemory";
  }
  return "?";
}

const char* to_string(LadderStep s) {
  switch (s) {
    case LadderStep::PartialReconfig: return "PartialReconfig";
    case LadderStep::Validate: return "Validate";
    case LadderStep::SelfTest: return "SelfTest";
    case LadderStep::VariantRetry: return "VariantRetry";
    case LadderStep::FullReconfig: return "FullReconfig";
    case LadderStep::Escalated: return "Escalated";
  }
  return "?";
}

RepairStart attempt_partial_reconfiguration(SystemState& state, TileId tile, Trace& trace) {
  Tile& t = state.tile(tile);
  if (t.health == TileHealth::PermanentlyDefective) return RepairStart::NoOpDefective;
  t.health = TileHealth::Reconfiguring;
  TraceEvent& ev = trace.emit(state.time, state.epoch, "RepairStarted");
  ev.tile = tile;
  ev.num["variant"] = t.variant_index;
  return RepairStart::Started;
}

bool validate_and_selftest(SystemState& state, TileId tile,
                           const std::vector<FaultGroundTruth>& remaining_truths, Trace& trace) {
  Tile& t = state.tile(tile);
  bool partition_ok = true;
  bool selftest_ok = true;
  for (const FaultGroundTruth& truth : remaining_truths) {
    if (truth.tile != tile) continue;
    switch (truth.nature) {
      case FaultNature::TransientState:
      case FaultNature::TransientConfig:
        break;  // transients never fail validation once rewritten
      case FaultNature::PermanentLogic:
        if (truth.affected_variants.count(t.variant_index)) partition_ok = false;
        break;
      case FaultNature::PermanentMemory:
        selftest_ok = false;
        break;
    }
  }
  const bool pass = partition_ok && selftest_ok;
  TraceEvent& ev = trace.emit(state.time, state.epoch, "ValidationResult");
  ev.tile = tile;
  ev.str["result"] = pass ? "pass" : "fail";
  ev.str["phase"] = partition_ok ? (selftest_ok ? "complete" : "selftest") : "partition";
  ev.num["variant"] = t.variant_index;
  if (pass) {
    t.health = TileHealth::Healthy;
    t.fault_counter = 0;  // episode closed
  }
  return pass;
}

LadderAction advance_ladder(SystemState& state, RepairLadderState& ladder,
                            const RecoveryConfig& cfg, Trace& trace) {
  ladder.attempts_on_variant += 1;
  if (ladder.attempts_on_variant < cfg.attempts_per_variant) {
    ladder.step = LadderStep::PartialReconfig;
    return LadderAction::RetrySameVariant;
  }
  Tile& t = state.tile(ladder.tile);
  ladder.variants_tried += 1;
  ladder.attempts_on_variant = 0;
  if (ladder.variants_tried < t.variants_available) {
    t.variant_index = (t.variant_index + 1) % t.variants_available;
    ladder.step = LadderStep::VariantRetry;
    TraceEvent& ev = trace.emit(state.time, state.epoch, "VariantSwitched");
    ev.tile = ladder.tile;
    ev.num["variant"] = t.variant_index;
    return LadderAction::SwitchVariant;
  }
  ladder.step = LadderStep::FullReconfig;
  return LadderAction::FullReconfig;
}

void begin_full_reconfiguration(SystemState& state, Trace& trace) {
  trace.emit(state.time, state.epoch, "FullRebootStarted");
  for (auto& t : state.tiles)
    if (t.health != TileHealth::PermanentlyDefective) t.health = TileHealth::Reconfiguring;
}

void escalate_to_stage3(SystemState& state, TileId tile, Trace& trace) {
  Tile& t = state.tile(tile);
  t.health = TileHealth::PermanentlyDefective;
  state.metrics.stage3_escalations += 1;
  trace.emit(state.time, state.epoch, "TilePermanentlyDefective").tile = tile;
}

}  // namespace lspool
