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

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "lspool/cli.hpp"
#include "lspool/scenario.hpp"

using namespace lspool;

namespace {

ScenarioConfig sample_config() {
  ScenarioConfig c;
  c.name = "sample";
  c.checkpoint_period_us = 500'000;
  c.duration_us = 4 * kUsPerSecond;
  c.rng_seed = 99;
  c.tile_count = 4;
  c.tile_capacity = 120;
  c.tile_variants = 2;
  c.tile_overrides = {{2, 80, std::nullopt}};
  c.freq_levels_pct = {50, 100, 150};
  c.threads = {{"E", Criticality::Essential, 30, true, 0},
               {"bg", Criticality::Low, 10, false, 20'000}};
  c.profile_ref = "Robustness";
  c.profile = *find_builtin_profile("Robustness");
  FaultEvent f1;
  f1.at_us = 1'000'000;
  f1.kind = FaultKind::MBU;
  f1.span = {1, 2};
  f1.tile = 1;
  FaultEvent f2;
  f2.at_us = 2'000'000;
  f2.kind = FaultKind::EccSyndrome;
  f2.region = EccRegion::ValidationMemory;
  f2.tile = 3;
  FaultEvent f3;
  f3.at_us = 1'500'000;
  f3.kind = FaultKind::PermanentLogic;
  f3.tile = 0;
  f3.affected_variants = {1};
  c.faults = {f1, f2, f3};
  c.fault_rates_per_hour[FaultKind::TransientState] = 12.5;
  c.profile_changes = {{3 * kUsPerSecond, "Energy"}};
  c.latencies.sync_cost_units = 3;
  return c;
}

std::string write_temp(const std::string& text, const std::string& name) {
  std::string path = "/tmp/lspool_test_" + name + ".json";
  std::ofstream out(path);
  out << text;
  return path;
}

int run_cli(std::initializer_list<const char*> args, std::string* out_text = nullptr) {
  std::vector<const char*> argv = {"lockstep-pool"};
  argv.insert(argv.end(), args);
  std::ostringstream out, err;
  int rc = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str() + err.str();
  return rc;
}

}  // namespace

TEST_CASE("a scenario round-trips through JSON unchanged") {
  ScenarioConfig c = sample_config();
  c.validate();
  ScenarioConfig back = ScenarioConfig::from_json(c.to_json());
  CHECK(back == c);
  // and an inline profile round-trips too
  c.profile_ref.reset();
  c.profile.name = "inline";
  c.profile.power_budget_mw = 1234;
  ScenarioConfig back2 = ScenarioConfig::from_json(c.to_json());
  CHECK(back2 == c);
}

TEST_CASE("validation errors carry the offending field") {
  ScenarioConfig c = sample_config();

  SUBCASE("missing checkpoint period") {
    std::string text = c.to_json();
    auto pos = text.find("\"checkpoint_period_us\"");
    REQUIRE(pos != std::string::npos);
    auto end = text.find('\n', pos);
    text.erase(pos, end - pos + 1);
    try {
      ScenarioConfig::from_json(text);
      FAIL("expected a validation error");
    } catch (const ScenarioError& e) {
      CHECK(std::string(e.what()).find("checkpoint_period_us") != std::string::npos);
    }
  }
  SUBCASE("non-adjacent MBU span") {
    c.faults[0].span = {0, 2};
    CHECK_THROWS_AS(c.validate(), ScenarioError);
  }
  SUBCASE("zero demand") {
    c.threads[0].demand = 0;
    CHECK_THROWS_AS(c.validate(), ScenarioError);
  }
  SUBCASE("delay must stay below the period") {
    c.threads[0].checkpoint_delay_max_us = c.checkpoint_period_us;
    CHECK_THROWS_AS(c.validate(), ScenarioError);
  }
  SUBCASE("stochastic rates require a seed") {
    c.rng_seed.reset();
    CHECK_THROWS_AS(c.validate(), ScenarioError);
  }
  SUBCASE("fault outside the simulated window") {
    c.faults[0].at_us = c.duration_us + 1;
    CHECK_THROWS_AS(c.validate(), ScenarioError);
  }
}

TEST_CASE("cli: run exits 0 and honors trace/report paths") {
  ScenarioConfig c = sample_config();
  c.faults.clear();
  c.fault_rates_per_hour.clear();
  c.profile_changes.clear();
  std::string path = write_temp(c.to_json(), "ok");
  std::string out;
  int rc = run_cli({"run", path.c_str(), "--trace", "/tmp/lspool_test_ok.trace", "--report",
                    "/tmp/lspool_test_ok.report"},
                   &out);
  CHECK(rc == 0);
  std::ifstream trace("/tmp/lspool_test_ok.trace");
  CHECK(trace.good());
  std::string first_line;
  std::getline(trace, first_line);
  CHECK(first_line.find("\"type\"") != std::string::npos);
  std::remove("/tmp/lspool_test_ok.trace");
  std::remove("/tmp/lspool_test_ok.report");
}

TEST_CASE("cli: malformed scenarios exit 2 naming the field") {
  std::string path = write_temp(R"({"schema": 1, "duration_us": 1000})", "bad");
  std::string out;
  int rc = run_cli({"run", path.c_str()}, &out);
  CHECK(rc == 2);
  CHECK(out.find("checkpoint_period_us") != std::string::npos);
}

TEST_CASE("cli: a scenario that cannot keep Essential running exits 3") {
  ScenarioConfig c;
  c.name = "tiny";
  c.duration_us = 2 * kUsPerSecond;
  c.tile_count = 1;
  c.threads = {{"E", Criticality::Essential, 10, true, 0}};
  c.profile_ref = "Speed";
  c.profile = *find_builtin_profile("Speed");
  std::string path = write_temp(c.to_json(), "loss");
  std::string out;
  CHECK(run_cli({"run", path.c_str()}, &out) == 3);
  CHECK(out.find("MISSION LOSS") != std::string::npos);
}

TEST_CASE("cli: oracle refuses oversized instances with exit 4") {
  ScenarioConfig c = sample_config();
  c.faults.clear();
  c.fault_rates_per_hour.clear();
  c.profile_changes.clear();
  c.tile_count = 10;
  std::string path = write_temp(c.to_json(), "oversize");
  CHECK(run_cli({"map", path.c_str(), "--oracle"}) == 4);
  CHECK(run_cli({"map", path.c_str()}) == 0);
}

TEST_CASE("cli: profiles prints the table rows") {
  std::string out;
  CHECK(run_cli({"profiles"}, &out) == 0);
  CHECK(out.find("Energy: L -> DMR,Separate") != std::string::npos);
  CHECK(out.find("Speed: E -> TMR") != std::string::npos);
  CHECK(out.find("Robustness: E -> NMR") != std::string::npos);
  CHECK(out.find("Descheduled") == std::string::npos);
}

TEST_CASE("cli: map prints NMR placement for Robustness when capacity permits") {
  ScenarioConfig c;
  c.name = "fig3";
  c.duration_us = kUsPerSecond;
  c.tile_count = 6;
  c.tile_capacity = 100;
  c.threads = {{"E", Criticality::Essential, 30, true, 0},
               {"H", Criticality::High, 30, true, 0},
               {"M", Criticality::Medium, 30, true, 0},
               {"L", Criticality::Low, 30, true, 0}};
  c.profile_ref = "Speed";
  c.profile = *find_builtin_profile("Speed");
  std::string path = write_temp(c.to_json(), "map");
  std::string out;
  CHECK(run_cli({"map", path.c_str(), "--profile", "Robustness", "--oracle"}, &out) == 0);
  CHECK(out.find("E (Essential): NMR") != std::string::npos);
  CHECK(out.find("objective gap") != std::string::npos);
}
