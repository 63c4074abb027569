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

#include <random>

#include "lspool/recovery.hpp"

using namespace lspool;

namespace {

SystemState one_tile_state(int variants = 3) {
  SystemState s;
  Tile t;
  t.id = 0;
  t.variants_available = variants;
  t.health = TileHealth::Suspect;
  s.tiles.push_back(t);
  s.validation.emplace(0, ValidationMemory(0));
  return s;
}

}  // namespace

TEST_CASE("partial reconfiguration takes the tile out of service") {
  SystemState s = one_tile_state();
  Trace trace;
  CHECK(attempt_partial_reconfiguration(s, 0, trace) == RepairStart::Started);
  CHECK(s.tile(0).health == TileHealth::Reconfiguring);
  CHECK(effective_capacity(s.tile(0)) == 0);

  s.tile(0).health = TileHealth::PermanentlyDefective;
  CHECK(attempt_partial_reconfiguration(s, 0, trace) == RepairStart::NoOpDefective);
  CHECK(s.tile(0).health == TileHealth::PermanentlyDefective);
}

TEST_CASE("validation passes for transients and resets the episode") {
  SystemState s = one_tile_state();
  s.tile(0).health = TileHealth::Reconfiguring;
  s.tile(0).fault_counter = 3;
  Trace trace;
  // transient-state damage never fails partition validation
  FaultGroundTruth t{0, FaultNature::TransientState, {}};
  CHECK(validate_and_selftest(s, 0, {t}, trace));
  CHECK(s.tile(0).health == TileHealth::Healthy);
  CHECK(s.tile(0).fault_counter == 0);
}

TEST_CASE("permanent logic fails validation exactly on unmaskable variants") {
  // Enumerate all variants against the affected set; the expected verdict is
  // plain set membership.
  FaultGroundTruth truth{0, FaultNature::PermanentLogic, {0, 1}};
  for (int variant = 0; variant < 3; ++variant) {
    SystemState s = one_tile_state();
    s.tile(0).health = TileHealth::Reconfiguring;
    s.tile(0).variant_index = variant;
    Trace trace;
    bool expect_pass = truth.affected_variants.count(variant) == 0;
    CHECK(validate_and_selftest(s, 0, {truth}, trace) == expect_pass);
  }
}

TEST_CASE("memory damage fails the self-test on every variant") {
  for (int variant = 0; variant < 3; ++variant) {
    SystemState s = one_tile_state();
    s.tile(0).health = TileHealth::Reconfiguring;
    s.tile(0).variant_index = variant;
    Trace trace;
    FaultGroundTruth truth{0, FaultNature::PermanentMemory, {0, 1, 2}};
    CHECK(!validate_and_selftest(s, 0, {truth}, trace));
  }
}

TEST_CASE("the ladder cycles variants and ends at full reconfiguration") {
  SystemState s = one_tile_state(3);
  RecoveryConfig cfg;
  cfg.attempts_per_variant = 2;
  Trace trace;
  RepairLadderState ladder;
  ladder.tile = 0;

  // Drive the ladder with validation failing every time; the action sequence
  // is fixed by attempts_per_variant x variants_available + 1.
  std::vector<LadderAction> actions;
  for (int i = 0; i < cfg.attempts_per_variant * 3; ++i)
    actions.push_back(advance_ladder(s, ladder, cfg, trace));

  using A = LadderAction;
  std::vector<LadderAction> expected = {A::RetrySameVariant, A::SwitchVariant,
                                        A::RetrySameVariant, A::SwitchVariant,
                                        A::RetrySameVariant, A::FullReconfig};
  CHECK(actions == expected);
  CHECK(ladder.step == LadderStep::FullReconfig);
  CHECK(s.tile(0).variant_index == 2);
  CHECK(ladder_bound(s.tile(0), cfg) == 7);
}

TEST_CASE("ladder never revisits an earlier step") {
  SystemState s = one_tile_state(4);
  RecoveryConfig cfg;
  cfg.attempts_per_variant = 3;
  Trace trace;
  RepairLadderState ladder;
  ladder.tile = 0;
  int last_variants_tried = 0;
  for (int i = 0; i < cfg.attempts_per_variant * 4; ++i) {
    advance_ladder(s, ladder, cfg, trace);
    CHECK(ladder.variants_tried >= last_variants_tried);
    last_variants_tried = ladder.variants_tried;
  }
  CHECK(ladder.step == LadderStep::FullReconfig);
}

TEST_CASE("episode simulation converges within the ladder bound") {
  // Randomized fault natures and affected-variant sets, driven through the
  // same decision sequence the supervisor uses.
  std::mt19937_64 rng(42);
  for (int round = 0; round < 500; ++round) {
    int variants = 1 + static_cast<int>(rng() % 4);
    SystemState s = one_tile_state(variants);
    RecoveryConfig cfg;
    cfg.attempts_per_variant = 1 + static_cast<int>(rng() % 3);
    Trace trace;

    FaultNature nature = static_cast<FaultNature>(rng() % 4);
    FaultGroundTruth truth{0, nature, {}};
    if (nature == FaultNature::PermanentLogic) {
      for (int v = 0; v < variants; ++v)
        if (rng() % 2) truth.affected_variants.insert(v);
      if (truth.affected_variants.empty()) truth.affected_variants.insert(0);
    } else if (nature == FaultNature::PermanentMemory) {
      for (int v = 0; v < variants; ++v) truth.affected_variants.insert(v);
    }

    bool transient = nature == FaultNature::TransientState ||
                     nature == FaultNature::TransientConfig;

    RepairLadderState ladder;
    ladder.tile = 0;
    int steps = 0;
    bool done = false;
    bool healthy = false;
    while (!done) {
      attempt_partial_reconfiguration(s, 0, trace);
      steps += 1;
      REQUIRE(steps <= ladder_bound(s.tile(0), cfg));
      // the rewrite clears configuration transients
      std::vector<FaultGroundTruth> remaining;
      if (!transient) remaining.push_back(truth);
      if (validate_and_selftest(s, 0, remaining, trace)) {
        done = true;
        healthy = true;
      } else if (advance_ladder(s, ladder, cfg, trace) == LadderAction::FullReconfig) {
        begin_full_reconfiguration(s, trace);
        steps += 1;
        if (validate_and_selftest(s, 0, remaining, trace)) {
          healthy = true;
        } else {
          escalate_to_stage3(s, 0, trace);
        }
        done = true;
      }
    }
    CHECK((s.tile(0).health == TileHealth::Healthy ||
           s.tile(0).health == TileHealth::PermanentlyDefective));
    if (transient) {
      CHECK(healthy);
      CHECK(s.tile(0).health == TileHealth::Healthy);
    }
    if (s.tile(0).health == TileHealth::PermanentlyDefective) {
      // absorbing: nothing brings it back
      attempt_partial_reconfiguration(s, 0, trace);
      CHECK(s.tile(0).health == TileHealth::PermanentlyDefective);
    }
  }
}

TEST_CASE("full reconfiguration sweeps every non-defective tile") {
  SystemState s;
  for (int i = 0; i < 3; ++i) {
    Tile t;
    t.id = i;
    s.tiles.push_back(t);
    s.validation.emplace(i, ValidationMemory(i));
  }
  s.tile(2).health = TileHealth::PermanentlyDefective;
  Trace trace;
  begin_full_reconfiguration(s, trace);
  CHECK(s.tile(0).health == TileHealth::Reconfiguring);
  CHECK(s.tile(1).health == TileHealth::Reconfiguring);
  CHECK(s.tile(2).health == TileHealth::PermanentlyDefective);
}
