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

#include "lspool/system_state.hpp"

using namespace lspool;

namespace {

SystemState small_state() {
  SystemState s;
  for (int i = 0; i < 4; ++i) {
    Tile t;
    t.id = i;
    t.capacity_nominal = 100;
    s.tiles.push_back(t);
    s.validation.emplace(i, ValidationMemory(i));
  }
  s.threads.push_back({"A", Criticality::Essential, 30, true, 0});
  s.threads.push_back({"B", Criticality::Low, 20, false, 0});
  s.mapping.assignments["A"] = {Mode::TMR, {0, 1, 2}, 100};
  s.mapping.assignments["B"] = {Mode::Separate, {3}, 100};
  s.mapping.active_tiles = {0, 1, 2, 3};
  return s;
}

}  // namespace

TEST_CASE("effective capacity follows health and frequency") {
  Tile t;
  t.capacity_nominal = 100;
  t.freq_pct = 100;
  CHECK(effective_capacity(t) == 100);
  t.freq_pct = 150;
  CHECK(effective_capacity(t) == 150);
  t.freq_pct = 100;
  t.health = TileHealth::PermanentlyDefective;
  CHECK(effective_capacity(t) == 0);
  t.health = TileHealth::Reconfiguring;
  CHECK(effective_capacity(t) == 0);
  t.health = TileHealth::ClockGated;
  CHECK(effective_capacity(t) == 0);
  t.health = TileHealth::Suspect;
  CHECK(effective_capacity(t) == 100);
}

TEST_CASE("replication level counts non-defective hosts") {
  SystemState s = small_state();
  CHECK(replication_level(s, "A") == 3);
  s.tile(2).health = TileHealth::PermanentlyDefective;
  CHECK(replication_level(s, "A") == 2);
  s.mapping.assignments["B"] = {Mode::Descheduled, {}, 100};
  CHECK(replication_level(s, "B") == 0);
  CHECK_THROWS_AS(replication_level(s, "nope"), ModelError);
}

TEST_CASE("validation memory enforces write locality") {
  ValidationMemory mem(2);
  CHECK_NOTHROW(mem.write(2, "A", {42, 1, {}}));
  CHECK_THROWS_AS(mem.write(1, "A", {43, 1, {}}), ModelError);
  REQUIRE(mem.find("A") != nullptr);
  CHECK(mem.find("A")->checksum == 42);
  CHECK(mem.find("missing") == nullptr);
}

TEST_CASE("uniform layout: canonical digest is tile independent") {
  // A replica's state representation does not depend on its host, so an
  // uncorrupted replica produces the same checksum wherever it runs.
  SystemState s = small_state();
  Digest before = canonical_digest("A", 5) ^ s.replica_perturb("A", 0);
  // migrate A's replica from tile 0 to tile 3
  s.mapping.assignments["A"].tiles = {1, 2, 3};
  Digest after = canonical_digest("A", 5) ^ s.replica_perturb("A", 3);
  CHECK(before == after);
}

TEST_CASE("mapping violations catch the declared invariants") {
  SystemState s = small_state();
  CHECK(mapping_violations(s).empty());

  SUBCASE("overloaded tile") {
    s.mapping.assignments["B"] = {Mode::Separate, {0}, 100};
    s.threads[1].demand = 80;  // 30 + 80 > 100
    CHECK(!mapping_violations(s).empty());
  }
  SUBCASE("replica count must match the mode") {
    s.mapping.assignments["A"].tiles = {0, 1};
    CHECK(!mapping_violations(s).empty());
  }
  SUBCASE("defective tiles host nothing") {
    s.tile(3).health = TileHealth::PermanentlyDefective;
    CHECK(!mapping_violations(s).empty());
  }
  SUBCASE("rt threads keep full time share") {
    s.mapping.assignments["A"].share_pct = 50;
    CHECK(!mapping_violations(s).empty());
  }
  SUBCASE("NMR needs at least four replicas") {
    s.mapping.assignments["A"] = {Mode::NMR, {0, 1, 2}, 100};
    CHECK(!mapping_violations(s).empty());
  }
  SUBCASE("unknown ids are flagged") {
    s.mapping.assignments["ghost"] = {Mode::Separate, {0}, 100};
    CHECK(!mapping_violations(s).empty());
  }
}

TEST_CASE("tile power model") {
  Tile t;
  t.capacity_nominal = 100;
  t.freq_pct = 100;
  // idle: static only
  CHECK(tile_power_uw(t, 0) == 100'000);
  // fully utilized at nominal frequency: 0.1 + 0.25 W
  CHECK(tile_power_uw(t, 100 * 100) == 350'000);
  // half utilized
  CHECK(tile_power_uw(t, 50 * 100) == 225'000);
  // same work at 1.5x clock costs 1.5x the dynamic power
  t.freq_pct = 150;
  CHECK(tile_power_uw(t, 50 * 100) == 100'000 + 187'500);
  t.health = TileHealth::ClockGated;
  CHECK(tile_power_uw(t, 0) == 0);
}
