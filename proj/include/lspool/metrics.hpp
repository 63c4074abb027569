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

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lspool/common.hpp"
#include "lspool/trace.hpp"

namespace lspool {

struct ThreadMetrics {
  /// Time with zero executing replicas.
  SimTime downtime_us = 0;
  /// Incorrect-I/O exposure: time a corrupted in-service replica may have
  /// emitted wrong data before the fault was resolved.
  SimTime exposure_us = 0;
  /// (time, live replica count) change points.
  std::vector<std::pair<SimTime, int>> replication_timeline;
};

/// Run accumulators. Also the payload of the final report; all values are
/// exact integers so an independent recomputation from the raw trace can be
/// compared with operator==.
struct MetricsReport {
  std::map<ThreadId, ThreadMetrics> per_thread;
  std::map<Disposition, std::int64_t> dispositions;
  std::int64_t stage1_corrections = 0;
  std::int64_t stage2_repair_attempts = 0;
  std::int64_t stage3_escalations = 0;
  std::int64_t ecc_main_memory = 0;
  std::int64_t ecc_tile_local = 0;
  std::int64_t ecc_validation_memory = 0;
  /// Sum over tiles of rate * time, in uW*us (= picojoules).
  std::int64_t energy_pj = 0;
  std::int64_t peak_rate_uw = 0;
  std::vector<std::pair<SimTime, int>> active_tiles_timeline;
  std::int64_t checkpoints = 0;
  SimTime duration_us = 0;
  std::vector<ThreadId> descheduled_essential;
  /// Worst heuristic-vs-oracle objective gap in percent, when oracle mode ran.
  std::optional<double> oracle_gap_pct;

  std::string to_json() const;
  std::string to_text() const;
};

/// Independent accounting path: rebuild the downtime/exposure/energy totals
/// and disposition counts from raw trace records alone.
struct RecomputedTotals {
  std::map<ThreadId, SimTime> downtime_us;
  std::map<ThreadId, SimTime> exposure_us;
  std::int64_t energy_pj = 0;
  std::map<Disposition, std::int64_t> dispositions;
};

RecomputedTotals recompute_from_trace(const std::vector<TraceEvent>& events);

/// True when every recomputed total equals the report exactly.
bool totals_match(const MetricsReport& report, const RecomputedTotals& totals,
                  std::string* mismatch = nullptr);

}  // namespace lspool
