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

#include "lspool/lockstep.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>

namespace lspool {

const char* to_string(TriggerKind k) {
  return k == TriggerKind::TimeTriggered ? "TimeTriggered" : "SupervisorInduced";
}

namespace {

std::string digest_hex(Digest d) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "0x%016" PRIx64, d);
  return buf;
}

}  // namespace

CheckpointReport assemble_report(const SystemState& state, TriggerKind trigger) {
  CheckpointReport report;
  report.epoch = state.epoch;
  report.at = state.time;
  report.trigger = trigger;

  for (const auto& [tid, assignment] : state.mapping.assignments) {
    if (assignment.mode == Mode::Descheduled || assignment.tiles.empty()) continue;
    if (state.halted.count(tid)) continue;

    ThreadVote vote;
    std::set<TileId> timed_out;
    for (TileId host : assignment.tiles) {
      const Tile& t = state.tile(host);
      if (!t.in_service()) {
        vote.absent.insert(host);
        continue;
      }
      const ValidationEntry* entry = state.validation.at(host).find(tid);
      if (entry && entry->epoch == state.epoch) {
        vote.checksums[host] = entry->checksum;
        if (state.thread(tid).checkpoint_delay_max_us > 0) vote.delayed.insert(host);
      } else {
        // In service but no fresh checksum: the replica missed its delay
        // allowance. Timeout counts as disagreement.
        timed_out.insert(host);
      }
    }

    // Decentralized majority: strictly more than half of the reporting
    // replicas must carry the same digest.
    std::map<Digest, int> tally;
    for (const auto& [host, digest] : vote.checksums) tally[digest]++;
    const int reporting = static_cast<int>(vote.checksums.size());
    for (const auto& [digest, count] : tally) {
      if (2 * count > reporting) {
        vote.majority = digest;
        break;
      }
    }

    if (vote.majority) {
      for (const auto& [host, digest] : vote.checksums)
        if (digest != *vote.majority) vote.dissenters.insert(host);
    } else if (reporting > 0) {
      for (const auto& [host, digest] : vote.checksums) vote.dissenters.insert(host);
    }
    vote.dissenters.insert(timed_out.begin(), timed_out.end());

    report.per_thread[tid] = std::move(vote);
  }
  return report;
}

CheckpointReport run_checkpoint(SystemState& state, const CheckpointTrigger& trigger,
                                Trace& trace) {
  state.epoch += 1;

  {
    TraceEvent& ev = trace.emit(state.time, state.epoch, "CheckpointStarted");
    ev.str["trigger"] = to_string(trigger.kind);
    if (!trigger.reason.empty()) ev.str["reason"] = trigger.reason;
  }

  // Checksum phase. Simulated in tile-id order; results must not depend on
  // it (threads run in arbitrary order between checkpoints).
  for (const auto& t : state.tiles) {
    if (!t.in_service()) continue;
    ValidationMemory& memory = state.validation.at(t.id);
    for (const auto& [tid, assignment] : state.mapping.assignments) {
      if (assignment.mode == Mode::Descheduled || !assignment.tiles.count(t.id)) continue;
      if (state.halted.count(tid)) continue;
      Digest digest = canonical_digest(tid, state.epoch) ^ state.replica_perturb(tid, t.id);
      memory.write(t.id, tid, ValidationEntry{digest, state.epoch, {}});
      TraceEvent& ev = trace.emit(state.time, state.epoch, "ChecksumWritten");
      ev.tile = t.id;
      ev.thread = tid;
      ev.str["digest"] = digest_hex(digest);
    }
  }

  // Compare phase: each tile cross-reads its siblings and records, in its
  // own memory, which siblings it disagrees with.
  for (const auto& t : state.tiles) {
    if (!t.in_service()) continue;
    ValidationMemory& memory = state.validation.at(t.id);
    for (const auto& [tid, assignment] : state.mapping.assignments) {
      if (!assignment.tiles.count(t.id)) continue;
      const ValidationEntry* own = memory.find(tid);
      if (!own || own->epoch != state.epoch) continue;
      ValidationEntry updated = *own;
      updated.disagreement_flags.clear();
      for (TileId sibling : assignment.tiles) {
        if (sibling == t.id) continue;
        const ValidationEntry* other = state.validation.at(sibling).find(tid);
        if (other && other->epoch == state.epoch && other->checksum != updated.checksum)
          updated.disagreement_flags.insert(sibling);
      }
      memory.write(t.id, tid, updated);
    }
  }

  return assemble_report(state, trigger.kind);
}

ResolveResult resolve_disagreement(SystemState& state, const CheckpointReport& report,
                                   Trace& trace) {
  if (report.epoch != state.epoch)
    throw ModelError("resolving a report for epoch " + std::to_string(report.epoch) +
                     " against state at epoch " + std::to_string(state.epoch));

  ResolveResult result;
  for (const auto& [tid, vote] : report.per_thread) {
    if (vote.dissenters.empty()) continue;

    if (vote.majority) {
      for (TileId d : vote.dissenters) {
        {
          TraceEvent& ev = trace.emit(state.time, state.epoch, "DisagreementDetected");
          ev.tile = d;
          ev.thread = tid;
          ev.str["majority"] = digest_hex(*vote.majority);
        }
        // The dissenting replica adopts the majority state via the
        // synchronization callback, then resumes execution.
        state.clear_replica_perturb(tid, d);
        Tile& tile = state.tile(d);
        tile.fault_counter += 1;
        if (tile.health == TileHealth::Healthy) tile.health = TileHealth::Suspect;
        result.syncs.push_back({tid, d});
        result.dissent_tiles.insert(d);
        state.metrics.stage1_corrections += 1;
        TraceEvent& ev = trace.emit(state.time, state.epoch, "StateSynchronized");
        ev.tile = d;
        ev.thread = tid;
      }
    } else if (!vote.checksums.empty()) {
      // No majority (DMR split or n-way disagreement): the replicas halt the
      // thread and the supervisor is asked to intervene.
      for (TileId d : vote.dissenters) {
        TraceEvent& ev = trace.emit(state.time, state.epoch, "DisagreementDetected");
        ev.tile = d;
        ev.thread = tid;
        ev.str["majority"] = "none";
        Tile& tile = state.tile(d);
        tile.fault_counter += 1;
        if (tile.health == TileHealth::Healthy) tile.health = TileHealth::Suspect;
        result.dissent_tiles.insert(d);
        result.no_majority_tiles.insert(d);
      }
      state.halted.insert(tid);
      result.escalated_threads.push_back(tid);
      TraceEvent& ev = trace.emit(state.time, state.epoch, "EscalationRaised");
      ev.thread = tid;
      ev.str["cause"] = "NoMajority";
    }
  }
  return result;
}

SimTime io_exposure(SystemState& state, const ThreadId& thread, SimTime fault_time,
                    SimTime resolution_time, Trace& trace) {
  if (resolution_time < fault_time)
    throw ModelError("io_exposure: resolution precedes fault");
  SimTime window = resolution_time - fault_time;
  if (window > 0 && state.find_thread(thread)) {
    state.metrics.per_thread[thread].exposure_us += window;
    TraceEvent& ev = trace.emit(resolution_time, state.epoch, "ExposureAccrued");
    ev.thread = thread;
    ev.num["amount_us"] = window;
  }
  return window;
}

}  // namespace lspool
