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

#include <doctest.h>

#include <algorithm>
#include <random>

#include "lspool/lockstep.hpp"

using namespace lspool;

namespace {

SystemState tmr_state(int tiles = 3) {
  SystemState s;
  for (int i = 0; i < tiles; ++i) {
    Tile t;
    t.id = i;
    s.tiles.push_back(t);
    s.validation.emplace(i, ValidationMemory(i));
  }
  s.threads.push_back({"T", Criticality::High, 30, true, 0});
  std::set<TileId> hosts;
  for (int i = 0; i < std::min(tiles, 3); ++i) hosts.insert(i);
  s.mapping.assignments["T"] = {Mode::TMR, hosts, 100};
  for (int i = 0; i < tiles; ++i) s.mapping.active_tiles.insert(i);
  return s;
}

}  // namespace

TEST_CASE("unanimous checkpoint has a majority and no dissenters") {
  SystemState s = tmr_state();
  Trace trace;
  CheckpointReport r = run_checkpoint(s, {TriggerKind::TimeTriggered, ""}, trace);
  const ThreadVote& v = r.per_thread.at("T");
  REQUIRE(v.majority.has_value());
  CHECK(v.dissenters.empty());
  CHECK(v.checksums.size() == 3);
  CHECK(*v.majority == canonical_digest("T", 1));
}

TEST_CASE("a corrupted replica dissents") {
  SystemState s = tmr_state();
  s.set_replica_perturb("T", 2, 0xdead);
  Trace trace;
  CheckpointReport r = run_checkpoint(s, {TriggerKind::TimeTriggered, ""}, trace);
  const ThreadVote& v = r.per_thread.at("T");
  REQUIRE(v.majority.has_value());
  CHECK(v.dissenters == std::set<TileId>{2});
}

TEST_CASE("two-replica votes: equality is the only agreeing pattern") {
  // Independent oracle: enumerate both digest patterns for two replicas and
  // derive the expected outcome from the strict-majority definition.
  for (bool differ : {false, true}) {
    int agreeing = differ ? 1 : 2;
    bool expect_majority = 2 * agreeing > 2;

    SystemState s = tmr_state(2);
    s.mapping.assignments["T"] = {Mode::DMR, {0, 1}, 100};
    if (differ) s.set_replica_perturb("T", 1, 0xbeef);
    Trace trace;
    CheckpointReport r = run_checkpoint(s, {TriggerKind::TimeTriggered, ""}, trace);
    const ThreadVote& v = r.per_thread.at("T");
    CHECK(v.majority.has_value() == expect_majority);
    if (differ) CHECK(v.dissenters == std::set<TileId>{0, 1});
  }
}

TEST_CASE("a reconfiguring tile is absent, not dissenting") {
  SystemState s = tmr_state();
  s.tile(2).health = TileHealth::Reconfiguring;
  Trace trace;
  CheckpointReport r = run_checkpoint(s, {TriggerKind::TimeTriggered, ""}, trace);
  const ThreadVote& v = r.per_thread.at("T");
  CHECK(v.absent == std::set<TileId>{2});
  CHECK(v.dissenters.empty());
  REQUIRE(v.majority.has_value());
}

TEST_CASE("missing a fresh checksum counts as disagreement") {
  SystemState s = tmr_state();
  Trace trace;
  run_checkpoint(s, {TriggerKind::TimeTriggered, ""}, trace);
  // Tile 2's replica never reaches a viable state for epoch 2: its entry
  // stays stale while the others write.
  s.epoch += 1;
  for (TileId t : {0, 1})
    s.validation.at(t).write(t, "T", {canonical_digest("T", s.epoch), s.epoch, {}});
  CheckpointReport r = assemble_report(s, TriggerKind::TimeTriggered);
  const ThreadVote& v = r.per_thread.at("T");
  CHECK(v.dissenters == std::set<TileId>{2});
  REQUIRE(v.majority.has_value());
}

TEST_CASE("resolution overwrites dissenting state and counts the fault") {
  SystemState s = tmr_state();
  s.set_replica_perturb("T", 2, 0xdead);
  Trace trace;
  CheckpointReport r = run_checkpoint(s, {TriggerKind::TimeTriggered, ""}, trace);
  ResolveResult res = resolve_disagreement(s, r, trace);
  REQUIRE(res.syncs.size() == 1);
  CHECK(res.syncs[0].tile == 2);
  CHECK(s.replica_perturb("T", 2) == 0);
  CHECK(s.tile(2).fault_counter == 1);
  CHECK(s.tile(2).health == TileHealth::Suspect);
  CHECK(s.halted.empty());

  // agreement afterwards is a fixed point
  CheckpointReport r2 = run_checkpoint(s, {TriggerKind::TimeTriggered, ""}, trace);
  CHECK(r2.per_thread.at("T").dissenters.empty());
  SystemState before = s;
  resolve_disagreement(s, r2, trace);
  CHECK(s.perturb == before.perturb);
  CHECK(s.halted == before.halted);
  CHECK(s.tile(2).fault_counter == before.tile(2).fault_counter);
}

TEST_CASE("a DMR split halts the thread and escalates") {
  SystemState s = tmr_state(2);
  s.mapping.assignments["T"] = {Mode::DMR, {0, 1}, 100};
  s.set_replica_perturb("T", 1, 0xbeef);
  Trace trace;
  CheckpointReport r = run_checkpoint(s, {TriggerKind::TimeTriggered, ""}, trace);
  ResolveResult res = resolve_disagreement(s, r, trace);
  CHECK(res.syncs.empty());
  CHECK(res.no_majority_tiles == std::set<TileId>{0, 1});
  REQUIRE(res.escalated_threads.size() == 1);
  CHECK(s.halted.count("T") == 1);
  // no digest adoption happened: the corruption is still there
  CHECK(s.replica_perturb("T", 1) == 0xbeef);
  bool saw_escalation = false;
  for (const auto& ev : trace.events())
    if (ev.type == "EscalationRaised") saw_escalation = true;
  CHECK(saw_escalation);
}

TEST_CASE("three-way split escalates the whole sibling group") {
  SystemState s = tmr_state();
  s.set_replica_perturb("T", 1, 0x1111);
  s.set_replica_perturb("T", 2, 0x2222);
  Trace trace;
  CheckpointReport r = run_checkpoint(s, {TriggerKind::TimeTriggered, ""}, trace);
  const ThreadVote& v = r.per_thread.at("T");
  CHECK(!v.majority.has_value());
  CHECK(v.dissenters == std::set<TileId>{0, 1, 2});
  ResolveResult res = resolve_disagreement(s, r, trace);
  CHECK(res.escalated_threads.size() == 1);
  CHECK(s.halted.count("T") == 1);
}

TEST_CASE("io exposure accumulates the fault-to-resolution window") {
  SystemState s = tmr_state();
  Trace trace;
  // fault at t=0.3s, time-triggered checkpoint resolves at t=1.0s
  SimTime fault_at = 300'000;
  SimTime resolved_at = 1'000'000;
  CHECK(io_exposure(s, "T", fault_at, resolved_at, trace) == 700'000);
  CHECK(s.metrics.per_thread.at("T").exposure_us == 700'000);
  // fault exactly at the checkpoint: zero window
  CHECK(io_exposure(s, "T", resolved_at, resolved_at, trace) == 0);
  CHECK(s.metrics.per_thread.at("T").exposure_us == 700'000);
  CHECK_THROWS_AS(io_exposure(s, "T", 10, 5, trace), ModelError);
}

TEST_CASE("decentralization: the report is a pure function of the memories") {
  SystemState s = tmr_state();
  s.set_replica_perturb("T", 0, 0x77);
  Trace trace;
  CheckpointReport r = run_checkpoint(s, {TriggerKind::TimeTriggered, ""}, trace);
  const SystemState& snapshot = s;
  CheckpointReport again = assemble_report(snapshot, TriggerKind::TimeTriggered);
  CHECK(r == again);
  CheckpointReport thrice = assemble_report(snapshot, TriggerKind::TimeTriggered);
  CHECK(again == thrice);
}

TEST_CASE("order independence: tile evaluation order does not change the vote") {
  SystemState a = tmr_state();
  a.threads.push_back({"U", Criticality::Low, 10, true, 0});
  a.mapping.assignments["U"] = {Mode::DMR, {0, 2}, 100};
  a.set_replica_perturb("T", 1, 0xabc);

  SystemState b = a;
  std::reverse(b.tiles.begin(), b.tiles.end());  // permuted execution order

  Trace ta, tb;
  CheckpointReport ra = run_checkpoint(a, {TriggerKind::TimeTriggered, ""}, ta);
  CheckpointReport rb = run_checkpoint(b, {TriggerKind::TimeTriggered, ""}, tb);
  CHECK(ra == rb);
}

TEST_CASE("single-transient recovery over randomized fault schedules") {
  // With >= 3 replicas and at most one corrupted replica per thread per
  // period, every thread is digest-equal right after resolution.
  std::mt19937_64 rng(20260811);
  for (int round = 0; round < 200; ++round) {
    int n_tiles = 3 + static_cast<int>(rng() % 4);
    int n_threads = 1 + static_cast<int>(rng() % 3);
    SystemState s;
    for (int i = 0; i < n_tiles; ++i) {
      Tile t;
      t.id = i;
      s.tiles.push_back(t);
      s.validation.emplace(i, ValidationMemory(i));
      s.mapping.active_tiles.insert(i);
    }
    for (int k = 0; k < n_threads; ++k) {
      ThreadId id = "T" + std::to_string(k);
      s.threads.push_back({id, Criticality::High, 10, true, 0});
      std::set<TileId> hosts;
      while (static_cast<int>(hosts.size()) < 3)
        hosts.insert(static_cast<TileId>(rng() % n_tiles));
      s.mapping.assignments[id] = {Mode::TMR, hosts, 100};
    }
    Trace trace;
    for (int period = 0; period < 5; ++period) {
      // at most one corruption per thread per period
      for (const auto& th : s.threads) {
        if (rng() % 2 == 0) continue;
        const auto& hosts = s.mapping.assignments.at(th.id).tiles;
        auto it = hosts.begin();
        std::advance(it, rng() % hosts.size());
        s.set_replica_perturb(th.id, *it, mix64(rng()) | 1);
      }
      CheckpointReport r = run_checkpoint(s, {TriggerKind::TimeTriggered, ""}, trace);

      // detection completeness: every corrupted replica shows up
      for (const auto& [tid, tiles] : s.perturb)
        for (const auto& [tile, p] : tiles) {
          if (p == 0) continue;
          const ThreadVote& v = r.per_thread.at(tid);
          CHECK((v.dissenters.count(tile) || !v.majority.has_value()));
        }

      resolve_disagreement(s, r, trace);
      for (const auto& th : s.threads) {
        for (TileId host : s.mapping.assignments.at(th.id).tiles)
          CHECK(s.replica_perturb(th.id, host) == 0);
      }
    }
  }
}
