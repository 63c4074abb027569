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
#include <set>
#include <vector>

#include "lspool/system_state.hpp"
#include "lspool/trace.hpp"

namespace lspool {

enum class TriggerKind { TimeTriggered, SupervisorInduced };

const char* to_string(TriggerKind k);

/// Why a checkpoint fired. Time-triggered checkpoints run at fixed period P
/// since the previous checkpoint; the supervisor can induce one early (e.g.
/// after assigning threads), which resets the period phase.
struct CheckpointTrigger {
  TriggerKind kind = TriggerKind::TimeTriggered;
  std::string reason;
};

/// Outcome of the decentralized majority decision for one thread.
struct ThreadVote {
  /// Fresh checksums read from the validation memories, per reporting tile.
  std::map<TileId, Digest> checksums;
  /// Majority digest; nullopt = NoMajority.
  std::optional<Digest> majority;
  /// Reporting tiles disagreeing with the majority, plus in-service hosts
  /// that failed to produce a fresh checksum (timeout == disagreement).
  std::set<TileId> dissenters;
  /// Hosts that deferred the checkpoint within their delay allowance.
  std::set<TileId> delayed;
  /// Hosts out of service this checkpoint (reconfiguring etc.); absent,
  /// not dissenting.
  std::set<TileId> absent;

  bool operator==(const ThreadVote&) const = default;
};

struct CheckpointReport {
  Epoch epoch = 0;
  SimTime at = 0;
  TriggerKind trigger = TriggerKind::TimeTriggered;
  std::map<ThreadId, ThreadVote> per_thread;

  bool operator==(const CheckpointReport&) const = default;
};

struct LockstepConfig {
  SimTime period_us = kUsPerSecond;
  /// Per-thread state synchronization cost in capacity units, charged on the
  /// dissenting tile during the next period.
  int sync_cost_units = 0;
};

/// Pure majority computation over the validation memories: no state mutated.
/// The supervisor "just reads out the results", so recomputing this from a
/// read-only snapshot must yield the identical report.
CheckpointReport assemble_report(const SystemState& state, TriggerKind trigger);

/// Execute a checkpoint: every in-service hosting tile writes a (checksum,
/// epoch) entry for each of its pending threads into its own validation
/// memory, cross-reads its siblings, flags disagreements, and the report is
/// assembled from the memories. Advances state.epoch.
CheckpointReport run_checkpoint(SystemState& state, const CheckpointTrigger& trigger,
                                Trace& trace);

/// One replica overwritten from a majority sibling.
struct SyncAction {
  ThreadId thread;
  TileId tile;
};

struct ResolveResult {
  std::vector<SyncAction> syncs;
  /// Tiles attributed at least one dissent this checkpoint.
  std::set<TileId> dissent_tiles;
  /// Tiles involved in a no-majority split (escalate ladder immediately).
  std::set<TileId> no_majority_tiles;
  /// Threads halted pending Stage 2/supervisor action.
  std::vector<ThreadId> escalated_threads;
};

/// Stage-1 fault correction: dissenting replicas adopt the majority state,
/// their tiles are marked Suspect with the fault counter incremented; a
/// no-majority group halts the thread and raises an escalation.
ResolveResult resolve_disagreement(SystemState& state, const CheckpointReport& report,
                                   Trace& trace);

/// Record incorrect-I/O exposure for a thread whose corrupted replica ran
/// from fault_time until resolution_time. Returns the added duration.
SimTime io_exposure(SystemState& state, const ThreadId& thread, SimTime fault_time,
                    SimTime resolution_time, Trace& trace);

}  // namespace lspool
