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

#include "lspool/engine.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace lspool {

bool RunResult::essential_descheduled() const {
  for (const auto& t : state.threads) {
    if (t.criticality != Criticality::Essential) continue;
    const Assignment* a = state.mapping.find(t.id);
    if (!a || a->mode == Mode::Descheduled) return true;
  }
  return false;
}

Engine::Engine(ScenarioConfig scenario) : scenario_(std::move(scenario)) {
  scenario_.validate();
  strategy_cfg_.freq_levels_pct = scenario_.freq_levels_pct;
  recovery_cfg_.partial_reconfig_us = scenario_.latencies.partial_reconfig_us;
  recovery_cfg_.full_reboot_us = scenario_.latencies.full_reboot_us;
  recovery_cfg_.attempts_per_variant = scenario_.attempts_per_variant;
  profile_ = scenario_.profile;
}

void Engine::schedule(SimTime t, EventKind kind, int index, TileId tile, std::uint64_t gen,
                      std::string reason) {
  queue_.push(Event{t, next_seq_++, kind, index, tile, gen, std::move(reason)});
}

void Engine::build_initial_state() {
  state_.tiles = scenario_.build_tiles();
  state_.threads = scenario_.threads;
  for (const auto& t : state_.tiles) state_.validation.emplace(t.id, ValidationMemory(t.id));
  for (const auto& t : state_.threads) state_.metrics.per_thread[t.id];
}

void Engine::generate_stochastic_faults() {
  for (const auto& f : scenario_.faults) faults_.push_back({f, f.at_us, {}, {}, {}, false, false});

  double total_rate = 0;
  for (const auto& [kind, rate] : scenario_.fault_rates_per_hour) total_rate += rate;
  if (total_rate <= 0) return;

  std::mt19937_64 rng(*scenario_.rng_seed);
  std::vector<FaultEvent> generated;
  for (const auto& [kind, rate] : scenario_.fault_rates_per_hour) {
    if (rate <= 0) continue;
    const double rate_per_us = rate / 3600.0e6;
    std::exponential_distribution<double> gap(rate_per_us);
    std::uniform_int_distribution<int> tile_pick(0, scenario_.tile_count - 1);
    double t = gap(rng);
    while (t < static_cast<double>(scenario_.duration_us)) {
      FaultEvent f;
      f.at_us = static_cast<SimTime>(t);
      f.kind = kind;
      f.seed_derived = true;
      if (kind == FaultKind::MBU) {
        if (scenario_.tile_count >= 2) {
          std::uniform_int_distribution<int> start(0, scenario_.tile_count - 2);
          int s = start(rng);
          if (scenario_.floorplan_order.empty()) {
            f.span = {s, s + 1};
          } else {
            f.span = {scenario_.floorplan_order[s], scenario_.floorplan_order[s + 1]};
          }
          f.tile = f.span.front();
          generated.push_back(f);
        }
      } else if (kind == FaultKind::EccSyndrome) {
        std::uniform_int_distribution<int> region(0, 2);
        f.region = static_cast<EccRegion>(region(rng));
        f.tile = f.region == EccRegion::MainMemory ? -1 : tile_pick(rng);
        generated.push_back(f);
      } else {
        f.tile = tile_pick(rng);
        if (kind == FaultKind::PermanentLogic) {
          // random non-empty set of unmaskable variants
          std::uniform_int_distribution<int> coin(0, 1);
          for (int v = 0; v < scenario_.tile_variants; ++v)
            if (coin(rng)) f.affected_variants.insert(v);
          if (f.affected_variants.empty()) f.affected_variants.insert(0);
        }
        generated.push_back(f);
      }
      t += gap(rng);
    }
  }
  std::stable_sort(generated.begin(), generated.end(),
                   [](const FaultEvent& a, const FaultEvent& b) { return a.at_us < b.at_us; });
  for (const auto& f : generated) faults_.push_back({f, f.at_us, {}, {}, {}, false, false});
}

void Engine::compute_initial_mapping() {
  std::vector<ThreadSpec> considered = state_.threads;
  std::set<ThreadId> dropped;
  MapResult r = map_threads(considered, state_.tiles, profile_);
  while (!r.feasible && !considered.empty()) {
    // Best effort: shed the unsatisfiable thread and keep the system alive.
    ThreadId victim = r.first_unsatisfiable.empty() ? considered.front().id
                                                    : r.first_unsatisfiable;
    dropped.insert(victim);
    considered.erase(std::remove_if(considered.begin(), considered.end(),
                                    [&](const ThreadSpec& t) { return t.id == victim; }),
                     considered.end());
    r = map_threads(considered, state_.tiles, profile_);
  }
  state_.mapping = r.mapping;
  for (const ThreadId& id : dropped) {
    state_.mapping.assignments[id] = Assignment{Mode::Descheduled, {}, 100};
    trace_.emit(state_.time, state_.epoch, "ThreadDescheduled").thread = id;
  }
  // Gate tiles the mapping left out of the active set (power-budget packing).
  for (auto& t : state_.tiles) {
    if (t.in_service() && !state_.mapping.active_tiles.count(t.id)) {
      if (profile_.power_budget_mw) {
        t.health = TileHealth::ClockGated;
        trace_.emit(state_.time, state_.epoch, "TileGated").tile = t.id;
      } else {
        state_.mapping.active_tiles.insert(t.id);
      }
    }
  }
  TraceEvent& ev = trace_.emit(state_.time, state_.epoch, "MappingComputed");
  ev.str["profile"] = profile_.name;
  ev.num["threads_mapped"] =
      static_cast<std::int64_t>(state_.mapping.assignments.size() - dropped.size());
}

std::vector<FaultGroundTruth> Engine::truths_for(TileId tile) const {
  std::vector<FaultGroundTruth> out;
  auto it = truth_.find(tile);
  if (it == truth_.end()) return out;
  for (const auto& [idx, truth] : it->second) out.push_back(truth);
  return out;
}

// ---------------------------------------------------------------------------
// Metric integration
// ---------------------------------------------------------------------------

void Engine::integrate_to(SimTime t) {
  SimTime dt = t - integrated_to_;
  if (dt < 0) throw ModelError("time went backwards in integrate_to");
  if (dt > 0) {
    long long system_rate = 0;
    for (const auto& tile : state_.tiles) {
      long long load = tile_load_up(state_, tile.id);
      auto debt = sync_debt_.find(tile.id);
      if (debt != sync_debt_.end() && tile.in_service()) {
        load = std::min(load + debt->second * 100, effective_capacity_up(tile));
      }
      long long rate = tile_power_uw(tile, load);
      system_rate += rate;
      if (rate > 0) {
        state_.metrics.energy_pj += rate * dt;
        TraceEvent& ev = trace_.emit(t, state_.epoch, "EnergyAccrued");
        ev.tile = tile.id;
        ev.num["dur_us"] = dt;
        ev.num["rate_uw"] = rate;
        ev.num["pj"] = rate * dt;
      }
    }
    state_.metrics.peak_rate_uw = std::max<std::int64_t>(state_.metrics.peak_rate_uw, system_rate);

    for (const auto& th : state_.threads) {
      if (state_.executing_replicas(th.id) == 0) {
        state_.metrics.per_thread[th.id].downtime_us += dt;
        TraceEvent& ev = trace_.emit(t, state_.epoch, "DowntimeAccrued");
        ev.thread = th.id;
        ev.num["amount_us"] = dt;
      }
    }
  }
  integrated_to_ = t;
  state_.time = t;
  snapshot_timelines();
}

void Engine::snapshot_timelines() {
  for (const auto& th : state_.threads) {
    int level = state_.executing_replicas(th.id);
    auto it = last_replication_.find(th.id);
    if (it == last_replication_.end() || it->second != level) {
      last_replication_[th.id] = level;
      state_.metrics.per_thread[th.id].replication_timeline.push_back({state_.time, level});
    }
  }
  int active = static_cast<int>(state_.mapping.active_tiles.size());
  if (active != last_active_tiles_) {
    last_active_tiles_ = active;
    state_.metrics.active_tiles_timeline.push_back({state_.time, active});
  }
}

// ---------------------------------------------------------------------------
// Fault bookkeeping
// ---------------------------------------------------------------------------

void Engine::dispose(int fault_index, Disposition d) {
  FaultRecord& rec = faults_[fault_index];
  if (rec.disposition) return;
  rec.disposition = d;
  state_.metrics.dispositions[d] += 1;
  TraceEvent& ev = trace_.emit(state_.time, state_.epoch, "FaultDisposed");
  ev.num["fault"] = fault_index;
  ev.str["disposition"] = to_string(d);
  ev.str["kind"] = to_string(rec.ev.kind);
  if (rec.ev.tile >= 0) ev.tile = rec.ev.tile;
}

void Engine::open_corruption(int fault_index, const ThreadId& thread, TileId tile) {
  faults_[fault_index].open_corruptions.insert({thread, tile});
  if (state_.replica_executing(thread, tile)) {
    auto key = std::make_pair(thread, tile);
    if (!corrupt_since_.count(key)) corrupt_since_[key] = state_.time;
  }
}

void Engine::close_exposure_window(const ThreadId& thread, TileId tile, SimTime at) {
  auto key = std::make_pair(thread, tile);
  auto it = corrupt_since_.find(key);
  if (it == corrupt_since_.end()) return;
  io_exposure(state_, thread, it->second, at, trace_);
  corrupt_since_.erase(it);
}

void Engine::close_corruption(const ThreadId& thread, TileId tile, bool via_stage2,
                              bool resolved_by_sync) {
  for (size_t i = 0; i < faults_.size(); ++i) {
    FaultRecord& rec = faults_[i];
    auto key = std::make_pair(thread, tile);
    if (!rec.open_corruptions.erase(key)) continue;
    if (via_stage2) rec.needed_stage2 = true;
    if (rec.disposition) continue;
    if (rec.open_corruptions.empty() && rec.open_truth_tiles.empty()) {
      if (!resolved_by_sync && !via_stage2) {
        // Overwritten by a migration or remap before any vote saw it.
        dispose(static_cast<int>(i), rec.detected ? Disposition::CorrectedStage1
                                                  : Disposition::Masked);
      } else if (rec.needed_stage2) {
        dispose(static_cast<int>(i), Disposition::RepairedStage2);
      } else {
        dispose(static_cast<int>(i), Disposition::CorrectedStage1);
      }
    }
  }
}

void Engine::perturb_from_truth() {
  // Faults living in configuration or permanent damage corrupt the hosted
  // replicas anew every period until Stage 2 takes the tile out.
  for (const auto& [tile_id, entries] : truth_) {
    const Tile& tile = state_.tile(tile_id);
    if (!tile.in_service()) continue;
    for (const auto& [fault_idx, truth] : entries) {
      if (!truth.corrupts(tile.variant_index)) continue;
      for (const auto& [tid, a] : state_.mapping.assignments) {
        if (!a.tiles.count(tile_id) || a.mode == Mode::Descheduled) continue;
        if (state_.halted.count(tid)) continue;
        Digest p = mix64(0x5eedf00d ^ (static_cast<Digest>(fault_idx) << 32) ^
                         (static_cast<Digest>(tile_id) << 16) ^ fnv1a(tid) ^ state_.epoch);
        if (p == 0) p = 1;
        state_.set_replica_perturb(tid, tile_id, state_.replica_perturb(tid, tile_id) ^ p);
        open_corruption(fault_idx, tid, tile_id);
      }
    }
  }
}

void Engine::finalize_dispositions() {
  for (size_t i = 0; i < faults_.size(); ++i) {
    FaultRecord& rec = faults_[i];
    if (rec.disposition) continue;
    // End of run with the episode still open. A permanently dead target is a
    // Stage-3 outcome; anything that never produced an observable effect in
    // the simulated window is recorded as such.
    if (rec.ev.tile >= 0 &&
        state_.tile(rec.ev.tile).health == TileHealth::PermanentlyDefective) {
      dispose(static_cast<int>(i), Disposition::PermanentStage3);
    } else if (rec.detected) {
      dispose(static_cast<int>(i), Disposition::RepairedStage2);
    } else {
      dispose(static_cast<int>(i), Disposition::NoEffect);
    }
  }
}

// ---------------------------------------------------------------------------
// Injection
// ---------------------------------------------------------------------------

void Engine::inject(int fault_index) {
  FaultRecord& rec = faults_[fault_index];
  const FaultEvent& f = rec.ev;
  rec.injected_at = state_.time;

  {
    TraceEvent& ev = trace_.emit(state_.time, state_.epoch, "FaultInjected");
    ev.num["fault"] = fault_index;
    ev.str["kind"] = to_string(f.kind);
    if (f.kind == FaultKind::MBU) {
      std::string span;
      for (TileId t : f.span) span += (span.empty() ? "" : ",") + std::to_string(t);
      ev.str["span"] = span;
    } else if (f.tile >= 0) {
      ev.tile = f.tile;
    }
    if (f.kind == FaultKind::EccSyndrome) ev.str["region"] = to_string(f.region);
  }

  auto corrupt_running_replicas = [&](TileId tile_id) {
    bool any = false;
    for (const auto& [tid, a] : state_.mapping.assignments) {
      if (!a.tiles.count(tile_id) || a.mode == Mode::Descheduled) continue;
      if (state_.halted.count(tid)) continue;
      Digest p = mix64(0xfa171dc0deULL ^ (static_cast<Digest>(fault_index) << 20) ^
                       (static_cast<Digest>(tile_id) << 12) ^ fnv1a(tid));
      if (p == 0) p = 1;
      state_.set_replica_perturb(tid, tile_id, state_.replica_perturb(tid, tile_id) ^ p);
      open_corruption(fault_index, tid, tile_id);
      any = true;
    }
    return any;
  };

  switch (f.kind) {
    case FaultKind::TransientState: {
      const Tile& t = state_.tile(f.tile);
      if (!t.in_service()) {
        dispose(fault_index, Disposition::NoEffect);
        break;
      }
      if (!corrupt_running_replicas(f.tile)) dispose(fault_index, Disposition::NoEffect);
      break;
    }
    case FaultKind::TransientConfig:
    case FaultKind::PermanentLogic:
    case FaultKind::PermanentMemory: {
      const Tile& t = state_.tile(f.tile);
      if (t.health == TileHealth::PermanentlyDefective) {
        dispose(fault_index, Disposition::NoEffect);
        break;
      }
      FaultGroundTruth truth;
      truth.tile = f.tile;
      if (f.kind == FaultKind::TransientConfig) {
        truth.nature = FaultNature::TransientConfig;
      } else if (f.kind == FaultKind::PermanentLogic) {
        truth.nature = FaultNature::PermanentLogic;
        truth.affected_variants = f.affected_variants;
        if (truth.affected_variants.empty()) truth.affected_variants.insert(t.variant_index);
      } else {
        truth.nature = FaultNature::PermanentMemory;
        for (int v = 0; v < t.variants_available; ++v) truth.affected_variants.insert(v);
      }
      truth_[f.tile].push_back({fault_index, truth});
      rec.open_truth_tiles.insert(f.tile);
      if (t.in_service() && truth.corrupts(t.variant_index)) corrupt_running_replicas(f.tile);
      break;
    }
    case FaultKind::MBU: {
      // A multi-bit upset hits the configuration of each spanned tile.
      bool all_dead = true;
      for (TileId span_tile : f.span) {
        const Tile& t = state_.tile(span_tile);
        if (t.health == TileHealth::PermanentlyDefective) continue;
        all_dead = false;
        FaultGroundTruth truth;
        truth.tile = span_tile;
        truth.nature = FaultNature::TransientConfig;
        truth_[span_tile].push_back({fault_index, truth});
        rec.open_truth_tiles.insert(span_tile);
        if (t.in_service()) corrupt_running_replicas(span_tile);
      }
      if (all_dead) dispose(fault_index, Disposition::NoEffect);
      break;
    }
    case FaultKind::EccSyndrome: {
      switch (f.region) {
        case EccRegion::MainMemory: {
          state_.metrics.ecc_main_memory += 1;
          TraceEvent& ev = trace_.emit(state_.time, state_.epoch, "EccSyndromeObserved");
          ev.str["region"] = to_string(f.region);
          break;
        }
        case EccRegion::TileLocal:
          state_.metrics.ecc_tile_local += 1;
          break;
        case EccRegion::ValidationMemory:
          // Deferred: processed (logged) after the next checkpoint.
          state_.metrics.ecc_validation_memory += 1;
          deferred_ecc_.push_back(fault_index);
          break;
      }
      dispose(fault_index, Disposition::Masked);
      break;
    }
  }
}

// ---------------------------------------------------------------------------
// Stage 2 ladder driving
// ---------------------------------------------------------------------------

void Engine::enter_ladder(TileId tile) {
  if (ladders_.count(tile) || reboot_in_progress_) return;
  if (state_.tile(tile).health == TileHealth::PermanentlyDefective) return;
  RepairLadderState ladder;
  ladder.tile = tile;
  ladders_[tile] = ladder;
  start_partial(tile);
  // Crossing the Stage-2 fault-counter threshold also schedules a strategy
  // refresh.
  recompute_strategies();
}

void Engine::start_partial(TileId tile) {
  // The tile leaves service; corrupted replicas stop emitting I/O here.
  for (const auto& [tid, a] : state_.mapping.assignments)
    if (a.tiles.count(tile)) close_exposure_window(tid, tile, state_.time);
  if (attempt_partial_reconfiguration(state_, tile, trace_) == RepairStart::NoOpDefective) {
    ladders_.erase(tile);
    return;
  }
  state_.metrics.stage2_repair_attempts += 1;
  schedule(state_.time + recovery_cfg_.partial_reconfig_us, EventKind::ReconfigDone, -1, tile);
  snapshot_timelines();
}

void Engine::handle_reconfig_done(TileId tile) {
  if (reboot_in_progress_) return;  // folded into the reboot
  auto lit = ladders_.find(tile);
  if (lit == ladders_.end()) return;
  RepairLadderState& ladder = lit->second;

  // The partial rewrite clears configuration transients on this tile.
  auto tit = truth_.find(tile);
  if (tit != truth_.end()) {
    auto& entries = tit->second;
    for (auto it = entries.begin(); it != entries.end();) {
      if (it->second.nature == FaultNature::TransientConfig) {
        FaultRecord& rec = faults_[it->first];
        rec.open_truth_tiles.erase(tile);
        rec.needed_stage2 = true;
        if (!rec.disposition && rec.open_truth_tiles.empty()) {
          // Corruptions tied to this config fault die with the repair.
          for (auto c = rec.open_corruptions.begin(); c != rec.open_corruptions.end();) {
            state_.clear_replica_perturb(c->first, c->second);
            c = rec.open_corruptions.erase(c);
          }
          dispose(it->first, Disposition::RepairedStage2);
        }
        it = entries.erase(it);
      } else {
        ++it;
      }
    }
    if (entries.empty()) truth_.erase(tit);
  }

  ladder.step = LadderStep::Validate;
  if (validate_and_selftest(state_, tile, truths_for(tile), trace_)) {
    // Back in service; replicas resynchronize from their siblings.
    for (const auto& [tid, a] : state_.mapping.assignments) {
      if (!a.tiles.count(tile)) continue;
      if (state_.replica_perturb(tid, tile) != 0) {
        state_.clear_replica_perturb(tid, tile);
        close_corruption(tid, tile, /*via_stage2=*/true, /*resolved_by_sync=*/false);
        TraceEvent& ev = trace_.emit(state_.time, state_.epoch, "StateSynchronized");
        ev.tile = tile;
        ev.thread = tid;
      }
    }
    dissent_epochs_.erase(tile);
    ladders_.erase(lit);
    resume_halted_threads();
    recompute_strategies();
  } else {
    ladder.step = LadderStep::SelfTest;
    switch (advance_ladder(state_, ladder, recovery_cfg_, trace_)) {
      case LadderAction::RetrySameVariant:
      case LadderAction::SwitchVariant:
        start_partial(tile);
        break;
      case LadderAction::FullReconfig: {
        reboot_in_progress_ = true;
        for (const auto& t : state_.tiles)
          for (const auto& [tid, a] : state_.mapping.assignments)
            if (a.tiles.count(t.id)) close_exposure_window(tid, t.id, state_.time);
        begin_full_reconfiguration(state_, trace_);
        schedule(state_.time + recovery_cfg_.full_reboot_us, EventKind::RebootDone);
        snapshot_timelines();
        break;
      }
    }
  }
  snapshot_timelines();
}

void Engine::handle_reboot_done() {
  reboot_in_progress_ = false;
  trace_.emit(state_.time, state_.epoch, "FullRebootEnded");

  // The reboot rewrites every configuration and reloads all thread state:
  // transients are gone system-wide.
  for (auto it = truth_.begin(); it != truth_.end();) {
    auto& entries = it->second;
    for (auto e = entries.begin(); e != entries.end();) {
      if (e->second.nature == FaultNature::TransientConfig) {
        FaultRecord& rec = faults_[e->first];
        rec.open_truth_tiles.erase(it->first);
        rec.needed_stage2 = true;
        if (!rec.disposition && rec.open_truth_tiles.empty())
          dispose(e->first, Disposition::RepairedStage2);
        e = entries.erase(e);
      } else {
        ++e;
      }
    }
    it = entries.empty() ? truth_.erase(it) : std::next(it);
  }
  for (auto& [tid, tiles] : state_.perturb)
    for (auto& [tile, p] : tiles) close_corruption(tid, tile, true, false);
  state_.perturb.clear();

  std::vector<TileId> escalated;
  for (auto& t : state_.tiles) {
    if (t.health != TileHealth::Reconfiguring) continue;
    if (validate_and_selftest(state_, t.id, truths_for(t.id), trace_)) {
      dissent_epochs_.erase(t.id);
      ladders_.erase(t.id);
    } else {
      auto lit = ladders_.find(t.id);
      if (lit != ladders_.end()) lit->second.step = LadderStep::Escalated;
      escalated.push_back(t.id);
    }
  }
  for (TileId t : escalated) escalate(t);
  state_.halted.clear();
  resume_halted_threads();
  recompute_strategies();
  snapshot_timelines();
}

void Engine::escalate(TileId tile) {
  escalate_to_stage3(state_, tile, trace_);
  ladders_.erase(tile);
  dissent_epochs_.erase(tile);
  // Permanent ground truths on a dead tile reach their terminal state.
  auto tit = truth_.find(tile);
  if (tit != truth_.end()) {
    for (const auto& [idx, truth] : tit->second) {
      FaultRecord& rec = faults_[idx];
      rec.open_truth_tiles.erase(tile);
      for (auto c = rec.open_corruptions.begin(); c != rec.open_corruptions.end();) {
        state_.clear_replica_perturb(c->first, c->second);
        c = rec.open_corruptions.erase(c);
      }
      if (!rec.disposition && rec.open_truth_tiles.empty())
        dispose(idx, Disposition::PermanentStage3);
    }
    truth_.erase(tit);
  }
  pending_strategy_apply_.push_back(tile);
  // The supervisor induces a checkpoint so the replacement strategy can be
  // applied at a boundary right away.
  checkpoint_gen_ += 1;
  schedule(state_.time, EventKind::InducedCheckpoint, -1, -1, checkpoint_gen_, "NewAssignment");
}

void Engine::resume_halted_threads() {
  std::vector<ThreadId> resumable;
  for (const ThreadId& tid : state_.halted) {
    const Assignment* a = state_.mapping.find(tid);
    if (!a || a->mode == Mode::Descheduled) {
      resumable.push_back(tid);  // nothing left to run; halt bookkeeping ends
      continue;
    }
    bool all_in_service = true;
    for (TileId t : a->tiles)
      if (!state_.tile(t).in_service()) all_in_service = false;
    if (all_in_service) resumable.push_back(tid);
  }
  for (const ThreadId& tid : resumable) {
    state_.halted.erase(tid);
    // The supervisor restores the last consistent state on every replica.
    for (TileId t : state_.hosts_of(tid)) {
      if (state_.replica_perturb(tid, t) != 0) {
        state_.clear_replica_perturb(tid, t);
        close_corruption(tid, t, /*via_stage2=*/true, /*resolved_by_sync=*/false);
      }
    }
    trace_.emit(state_.time, state_.epoch, "ThreadResumed").thread = tid;
  }
  if (!resumable.empty()) snapshot_timelines();
}

// ---------------------------------------------------------------------------
// Stage 3 driving
// ---------------------------------------------------------------------------

void Engine::recompute_strategies() {
  if (recompute_pending_) return;
  recompute_pending_ = true;
  schedule(state_.time + scenario_.latencies.strategy_recompute_us, EventKind::StrategyRecompute);
}

void Engine::apply_pending_strategies() {
  while (!pending_strategy_apply_.empty()) {
    TileId dead = pending_strategy_apply_.front();
    pending_strategy_apply_.pop_front();
    ReplacementStrategy strategy;
    auto it = strategies_.find(dead);
    if (it != strategies_.end()) {
      strategy = it->second;
    } else {
      // No precomputed strategy yet (fault raced the first computation);
      // plan one on the spot.
      strategy = plan_replacement(state_, profile_, dead, strategy_cfg_);
    }
    SystemMapping before = state_.mapping;
    apply_replacement_strategy(state_, dead, strategy, profile_, trace_);
    // Replicas that left their host (dead tile or migration) stop emitting;
    // their corruption, if any, was overwritten by the majority state.
    for (const auto& [tid, a] : before.assignments) {
      const Assignment* now = state_.mapping.find(tid);
      for (TileId t : a.tiles) {
        if (now && now->mode != Mode::Descheduled && now->tiles.count(t)) continue;
        close_exposure_window(tid, t, state_.time);
        close_corruption(tid, t, /*via_stage2=*/false, /*resolved_by_sync=*/false);
      }
    }
    strategies_.erase(dead);
    recompute_strategies();
  }
  snapshot_timelines();
}

void Engine::apply_wholesale_mapping(const SystemMapping& next, const char* cause) {
  // Replicas that moved or vanished drop their modeled state; new hosts start
  // from the majority state.
  for (const auto& [tid, a] : state_.mapping.assignments) {
    const Assignment* n = next.find(tid);
    for (TileId t : a.tiles) {
      if (!n || !n->tiles.count(t)) {
        close_exposure_window(tid, t, state_.time);
        if (state_.replica_perturb(tid, t) != 0) {
          state_.clear_replica_perturb(tid, t);
          close_corruption(tid, t, /*via_stage2=*/false, /*resolved_by_sync=*/false);
        }
      }
    }
  }
  state_.mapping = next;
  for (auto& t : state_.tiles) {
    bool active = state_.mapping.active_tiles.count(t.id) > 0;
    if (active && t.health == TileHealth::ClockGated) {
      t.health = TileHealth::Healthy;
      trace_.emit(state_.time, state_.epoch, "TileUngated").tile = t.id;
    } else if (!active && t.in_service() && profile_.power_budget_mw) {
      t.health = TileHealth::ClockGated;
      trace_.emit(state_.time, state_.epoch, "TileGated").tile = t.id;
    } else if (!active && t.in_service()) {
      state_.mapping.active_tiles.insert(t.id);
    }
  }
  TraceEvent& ev = trace_.emit(state_.time, state_.epoch, "MappingComputed");
  ev.str["cause"] = cause;
  ev.str["profile"] = profile_.name;
}

void Engine::apply_profile_change(int index) {
  const ProfileChange& pc = scenario_.profile_changes[index];
  pending_profile_ = *find_builtin_profile(pc.profile);
  checkpoint_gen_ += 1;
  schedule(state_.time, EventKind::InducedCheckpoint, -1, -1, checkpoint_gen_, "NewAssignment");
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

void Engine::do_checkpoint(const CheckpointTrigger& trigger) {
  CheckpointReport report = run_checkpoint(state_, trigger, trace_);
  state_.metrics.checkpoints += 1;

  // Read-back marks detection for every corrupted replica that voted.
  for (const auto& [tid, vote] : report.per_thread) {
    for (TileId d : vote.dissenters) {
      for (auto& rec : faults_)
        if (rec.open_corruptions.count({tid, d})) rec.detected = true;
    }
  }

  ResolveResult resolved = resolve_disagreement(state_, report, trace_);

  // Sync cost hits the dissenting tiles during the next period.
  sync_debt_.clear();
  for (const auto& s : resolved.syncs) {
    sync_debt_[s.tile] += scenario_.latencies.sync_cost_units;
    close_exposure_window(s.thread, s.tile, state_.time);
    close_corruption(s.thread, s.tile, /*via_stage2=*/false, /*resolved_by_sync=*/true);
  }
  for (const ThreadId& tid : resolved.escalated_threads) {
    // The replicas halt: incorrect output stops, downtime starts.
    for (TileId t : state_.hosts_of(tid)) close_exposure_window(tid, t, state_.time);
  }

  // Dissent-window bookkeeping drives ladder entry.
  for (TileId t : resolved.dissent_tiles) {
    auto& window = dissent_epochs_[t];
    window.push_back(state_.epoch);
    while (!window.empty() &&
           window.front() + scenario_.dissent_window <= state_.epoch)
      window.pop_front();
  }
  std::set<TileId> enter;
  for (TileId t : resolved.no_majority_tiles) enter.insert(t);
  for (const auto& [t, window] : dissent_epochs_)
    if (static_cast<int>(window.size()) >= scenario_.dissent_threshold) enter.insert(t);
  for (TileId t : enter)
    if (state_.tile(t).in_service()) enter_ladder(t);

  // A tile that reported cleanly this checkpoint and is not under repair
  // sheds its Suspect mark.
  for (auto& t : state_.tiles) {
    if (t.health != TileHealth::Suspect) continue;
    if (resolved.dissent_tiles.count(t.id) || ladders_.count(t.id)) continue;
    t.health = TileHealth::Healthy;
  }

  apply_pending_strategies();

  if (pending_profile_) {
    profile_ = *pending_profile_;
    pending_profile_.reset();
    std::vector<ThreadSpec> considered;
    for (const auto& th : state_.threads)
      if (!state_.halted.count(th.id)) considered.push_back(th);
    MapResult r = map_threads(considered, state_.tiles, profile_);
    if (r.feasible) {
      // Halted threads keep their current assignment across the remap.
      SystemMapping next = r.mapping;
      for (const ThreadId& tid : state_.halted) {
        const Assignment* cur = state_.mapping.find(tid);
        if (cur) next.assignments[tid] = *cur;
        for (TileId t : state_.hosts_of(tid)) next.active_tiles.insert(t);
      }
      apply_wholesale_mapping(next, "ProfileChange");
    }
    recompute_strategies();
  }

  // Configuration and permanent damage corrupts the next period's state.
  perturb_from_truth();

  // Validation-memory ECC syndromes are deferred and logged after the
  // checkpoint.
  for (int idx : deferred_ecc_) {
    const FaultRecord& rec = faults_[idx];
    TraceEvent& ev = trace_.emit(state_.time, state_.epoch, "EccSyndromeObserved");
    ev.str["region"] = to_string(rec.ev.region);
    if (rec.ev.tile >= 0) ev.tile = rec.ev.tile;
  }
  deferred_ecc_.clear();

  // Capacity conservation: executing work never exceeds an in-service
  // tile's effective capacity.
  for (const auto& t : state_.tiles) {
    if (!t.in_service()) continue;
    long long executing = 0;
    for (const auto& [tid, a] : state_.mapping.assignments)
      if (a.tiles.count(t.id) && state_.replica_executing(tid, t.id))
        executing += static_cast<long long>(state_.thread(tid).demand) * a.share_pct;
    if (executing > effective_capacity_up(t))
      throw ModelError("capacity conservation violated on tile " + std::to_string(t.id));
  }

  snapshot_timelines();

  // Time-triggered cadence restarts from this completion.
  checkpoint_gen_ += 1;
  schedule(state_.time + scenario_.checkpoint_period_us, EventKind::TimedCheckpoint, -1, -1,
           checkpoint_gen_);
}

// ---------------------------------------------------------------------------
// Run loop
// ---------------------------------------------------------------------------

RunResult Engine::run() {
  build_initial_state();
  generate_stochastic_faults();
  compute_initial_mapping();
  snapshot_timelines();

  strategies_ = {};
  recompute_strategies();

  for (size_t i = 0; i < faults_.size(); ++i)
    schedule(faults_[i].ev.at_us, EventKind::FaultArrival, static_cast<int>(i));
  for (size_t i = 0; i < scenario_.profile_changes.size(); ++i)
    schedule(scenario_.profile_changes[i].at_us, EventKind::ProfileChange, static_cast<int>(i));
  checkpoint_gen_ += 1;
  schedule(scenario_.checkpoint_period_us, EventKind::TimedCheckpoint, -1, -1, checkpoint_gen_);

  while (!queue_.empty()) {
    Event ev = queue_.top();
    if (ev.t > scenario_.duration_us) break;
    queue_.pop();

    switch (ev.kind) {
      case EventKind::TimedCheckpoint:
      case EventKind::InducedCheckpoint:
        if (ev.gen != checkpoint_gen_) continue;  // superseded timer
        break;
      default:
        break;
    }

    integrate_to(ev.t);

    switch (ev.kind) {
      case EventKind::FaultArrival:
        inject(ev.index);
        break;
      case EventKind::TimedCheckpoint:
        do_checkpoint({TriggerKind::TimeTriggered, ev.reason});
        break;
      case EventKind::InducedCheckpoint:
        do_checkpoint({TriggerKind::SupervisorInduced, ev.reason});
        break;
      case EventKind::ReconfigDone:
        handle_reconfig_done(ev.tile);
        break;
      case EventKind::RebootDone:
        handle_reboot_done();
        break;
      case EventKind::StrategyRecompute: {
        recompute_pending_ = false;
        strategies_ = precompute_replacement_strategies(state_, profile_, strategy_cfg_);
        for (const auto& [tile, s] : strategies_) {
          TraceEvent& tev = trace_.emit(state_.time, state_.epoch, "StrategyPrecomputed");
          tev.tile = tile;
          tev.str["kind"] = to_string(s.kind);
          tev.str["feasible"] = s.feasible ? "true" : "false";
        }
        break;
      }
      case EventKind::ProfileChange:
        apply_profile_change(ev.index);
        break;
    }
  }

  integrate_to(scenario_.duration_us);
  // Corruptions still live at the horizon have been exposed until now.
  for (auto it = corrupt_since_.begin(); it != corrupt_since_.end();) {
    io_exposure(state_, it->first.first, it->second, scenario_.duration_us, trace_);
    it = corrupt_since_.erase(it);
  }
  finalize_dispositions();
  state_.metrics.duration_us = scenario_.duration_us;
  for (const auto& th : state_.threads) {
    if (th.criticality != Criticality::Essential) continue;
    const Assignment* a = state_.mapping.find(th.id);
    if (!a || a->mode == Mode::Descheduled)
      state_.metrics.descheduled_essential.push_back(th.id);
  }

  RunResult result;
  result.state = std::move(state_);
  result.trace = std::move(trace_);
  return result;
}

}  // namespace lspool
