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

#include <deque>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <vector>

#include "lspool/allocator.hpp"
#include "lspool/lockstep.hpp"
#include "lspool/recovery.hpp"
#include "lspool/scenario.hpp"
#include "lspool/system_state.hpp"
#include "lspool/trace.hpp"

namespace lspool {

struct RunResult {
  SystemState state;
  Trace trace;

  /// Mission-loss signal: an Essential thread ended the run descheduled.
  bool essential_descheduled() const;
};

/// Deterministic discrete-event engine implementing the continuous FDIR
/// cycle: time-triggered checkpoints vote and correct (Stage 1), repeated or
/// unresolvable faults walk the tile-repair ladder (Stage 2), and permanent
/// losses trigger the precomputed replacement strategies (Stage 3).
///
/// Single-threaded per instance; identical (scenario, seed) pairs produce
/// byte-identical traces. Separate instances share no mutable state and may
/// run concurrently.
class Engine {
 public:
  explicit Engine(ScenarioConfig scenario);

  RunResult run();

 private:
  enum class EventKind {
    FaultArrival,
    TimedCheckpoint,
    InducedCheckpoint,
    ReconfigDone,
    RebootDone,
    StrategyRecompute,
    ProfileChange,
  };

  struct Event {
    SimTime t = 0;
    std::uint64_t seq = 0;
    EventKind kind = EventKind::TimedCheckpoint;
    int index = -1;       // fault / profile-change index
    TileId tile = -1;     // ReconfigDone subject
    std::uint64_t gen = 0;  // checkpoint generation, stale timers are ignored
    std::string reason;
  };

  struct EventOrder {
    bool operator()(const Event& a, const Event& b) const {
      if (a.t != b.t) return a.t > b.t;
      return a.seq > b.seq;
    }
  };

  /// Disposition bookkeeping for one injected fault.
  struct FaultRecord {
    FaultEvent ev;
    SimTime injected_at = 0;
    std::optional<Disposition> disposition;
    /// Replica corruptions attributed to this fault, still unresolved.
    std::set<std::pair<ThreadId, TileId>> open_corruptions;
    /// Tiles whose ground-truth entry for this fault is still active.
    std::set<TileId> open_truth_tiles;
    bool needed_stage2 = false;
    bool detected = false;
  };

  void schedule(SimTime t, EventKind kind, int index = -1, TileId tile = -1,
                std::uint64_t gen = 0, std::string reason = {});
  void build_initial_state();
  void generate_stochastic_faults();
  void compute_initial_mapping();

  void integrate_to(SimTime t);
  void snapshot_timelines();

  void do_checkpoint(const CheckpointTrigger& trigger);
  void inject(int fault_index);
  void handle_reconfig_done(TileId tile);
  void handle_reboot_done();
  void recompute_strategies();
  void apply_profile_change(int index);

  void enter_ladder(TileId tile);
  void start_partial(TileId tile);
  void escalate(TileId tile);
  void apply_pending_strategies();
  void resume_halted_threads();
  void apply_wholesale_mapping(const SystemMapping& next, const char* cause);

  void open_corruption(int fault_index, const ThreadId& thread, TileId tile);
  void close_corruption(const ThreadId& thread, TileId tile, bool via_stage2,
                        bool resolved_by_sync);
  void close_exposure_window(const ThreadId& thread, TileId tile, SimTime at);
  void perturb_from_truth();
  void dispose(int fault_index, Disposition d);
  void finalize_dispositions();

  std::vector<FaultGroundTruth> truths_for(TileId tile) const;

  ScenarioConfig scenario_;
  SystemState state_;
  Trace trace_;
  StrategyConfig strategy_cfg_;
  RecoveryConfig recovery_cfg_;

  std::priority_queue<Event, std::vector<Event>, EventOrder> queue_;
  std::uint64_t next_seq_ = 0;
  std::uint64_t checkpoint_gen_ = 0;

  PerformanceProfile profile_;
  std::optional<PerformanceProfile> pending_profile_;

  std::vector<FaultRecord> faults_;
  /// fault index -> active ground truth per tile
  std::map<TileId, std::vector<std::pair<int, FaultGroundTruth>>> truth_;

  std::map<TileId, std::deque<Epoch>> dissent_epochs_;
  std::map<TileId, RepairLadderState> ladders_;
  bool reboot_in_progress_ = false;

  std::map<TileId, ReplacementStrategy> strategies_;
  bool recompute_pending_ = false;
  std::deque<TileId> pending_strategy_apply_;

  /// (thread, tile) -> time the replica's state became incorrect.
  std::map<std::pair<ThreadId, TileId>, SimTime> corrupt_since_;
  /// Sync work charged per tile for the current period, in capacity units.
  std::map<TileId, long long> sync_debt_;
  /// Validation-memory ECC syndromes waiting to be logged after the next
  /// checkpoint.
  std::vector<int> deferred_ecc_;

  SimTime integrated_to_ = 0;
  std::map<ThreadId, int> last_replication_;
  int last_active_tiles_ = -1;
};

}  // namespace lspool
