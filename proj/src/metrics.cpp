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

#include "lspool/metrics.hpp"

#include <sstream>

#include <json.hpp>

namespace lspool {

using nlohmann::json;

std::string MetricsReport::to_json() const {
  json j;
  j["duration_us"] = duration_us;
  j["checkpoints"] = checkpoints;
  json per;
  for (const auto& [tid, m] : per_thread) {
    json e;
    e["downtime_us"] = m.downtime_us;
    e["exposure_us"] = m.exposure_us;
    json tl = json::array();
    for (const auto& [t, level] : m.replication_timeline) tl.push_back({t, level});
    e["replication_timeline"] = tl;
    per[tid] = e;
  }
  j["per_thread"] = per;
  json disp;
  for (const auto& [d, n] : dispositions) disp[to_string(d)] = n;
  j["dispositions"] = disp;
  j["stage1_corrections"] = stage1_corrections;
  j["stage2_repair_attempts"] = stage2_repair_attempts;
  j["stage3_escalations"] = stage3_escalations;
  j["ecc_main_memory"] = ecc_main_memory;
  j["ecc_tile_local"] = ecc_tile_local;
  j["ecc_validation_memory"] = ecc_validation_memory;
  j["energy_pj"] = energy_pj;
  j["peak_rate_uw"] = peak_rate_uw;
  json act = json::array();
  for (const auto& [t, n] : active_tiles_timeline) act.push_back({t, n});
  j["active_tiles_timeline"] = act;
  if (!descheduled_essential.empty()) j["descheduled_essential"] = descheduled_essential;
  if (oracle_gap_pct) j["oracle_gap_pct"] = *oracle_gap_pct;
  return j.dump(2);
}

std::string MetricsReport::to_text() const {
  std::ostringstream os;
  os << "simulated " << duration_us / 1000000.0 << " s, " << checkpoints << " checkpoints\n";
  os << "energy " << energy_pj / 1.0e12 << " J, peak rate " << peak_rate_uw / 1.0e6 << " W\n";
  os << "stage 1 corrections: " << stage1_corrections
     << ", stage 2 repair attempts: " << stage2_repair_attempts
     << ", stage 3 escalations: " << stage3_escalations << "\n";
  os << "ecc syndromes: main=" << ecc_main_memory << " tile=" << ecc_tile_local
     << " validation=" << ecc_validation_memory << "\n";
  os << "fault dispositions:";
  if (dispositions.empty()) os << " none";
  for (const auto& [d, n] : dispositions) os << " " << to_string(d) << "=" << n;
  os << "\n";
  for (const auto& [tid, m] : per_thread) {
    os << "thread " << tid << ": downtime " << m.downtime_us / 1000000.0 << " s, io-exposure "
       << m.exposure_us / 1000000.0 << " s, replication";
    for (const auto& [t, level] : m.replication_timeline)
      os << " " << t / 1000000.0 << "s:" << level;
    os << "\n";
  }
  if (!descheduled_essential.empty()) {
    os << "MISSION LOSS: essential thread(s) descheduled:";
    for (const auto& t : descheduled_essential) os << " " << t;
    os << "\n";
  }
  if (oracle_gap_pct) os << "worst heuristic-vs-oracle gap: " << *oracle_gap_pct << "%\n";
  return os.str();
}

RecomputedTotals recompute_from_trace(const std::vector<TraceEvent>& events) {
  RecomputedTotals out;
  for (const TraceEvent& ev : events) {
    if (ev.type == "DowntimeAccrued") {
      out.downtime_us[ev.thread] += ev.num.at("amount_us");
    } else if (ev.type == "ExposureAccrued") {
      out.exposure_us[ev.thread] += ev.num.at("amount_us");
    } else if (ev.type == "EnergyAccrued") {
      out.energy_pj += ev.num.at("pj");
    } else if (ev.type == "FaultDisposed") {
      out.dispositions[disposition_from_string(ev.str.at("disposition"))] += 1;
    }
  }
  return out;
}

bool totals_match(const MetricsReport& report, const RecomputedTotals& totals,
                  std::string* mismatch) {
  auto fail = [&](const std::string& why) {
    if (mismatch) *mismatch = why;
    return false;
  };
  if (totals.energy_pj != report.energy_pj)
    return fail("energy " + std::to_string(totals.energy_pj) + " vs " +
                std::to_string(report.energy_pj));
  for (const auto& [tid, m] : report.per_thread) {
    SimTime down = 0, exp = 0;
    auto d = totals.downtime_us.find(tid);
    if (d != totals.downtime_us.end()) down = d->second;
    auto e = totals.exposure_us.find(tid);
    if (e != totals.exposure_us.end()) exp = e->second;
    if (down != m.downtime_us)
      return fail("downtime of " + tid + ": " + std::to_string(down) + " vs " +
                  std::to_string(m.downtime_us));
    if (exp != m.exposure_us)
      return fail("exposure of " + tid + ": " + std::to_string(exp) + " vs " +
                  std::to_string(m.exposure_us));
  }
  for (const auto& [d, n] : report.dispositions) {
    auto it = totals.dispositions.find(d);
    std::int64_t have = it == totals.dispositions.end() ? 0 : it->second;
    if (have != n)
      return fail(std::string("dispositions ") + to_string(d) + ": " + std::to_string(have) +
                  " vs " + std::to_string(n));
  }
  for (const auto& [d, n] : totals.dispositions) {
    if (!report.dispositions.count(d) && n != 0)
      return fail(std::string("dispositions ") + to_string(d) + " only in trace");
  }
  return true;
}

}  // namespace lspool
