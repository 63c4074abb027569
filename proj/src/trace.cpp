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

#include "lspool/trace.hpp"

#include <istream>
#include <ostream>

#include <json.hpp>

namespace lspool {

const char* to_string(Disposition d) {
  switch (d) {
    case Disposition::Masked: return "Masked";
    case Disposition::CorrectedStage1: return "CorrectedStage1";
    case Disposition::RepairedStage2: return "RepairedStage2";
    case Disposition::PermanentStage3: return "PermanentStage3";
    case Disposition::NoEffect: return "NoEffect";
  }
  return "?";
}

Disposition disposition_from_string(const std::string& s) {
  if (s == "Masked") return Disposition::Masked;
  if (s == "CorrectedStage1") return Disposition::CorrectedStage1;
  if (s == "RepairedStage2") return Disposition::RepairedStage2;
  if (s == "PermanentStage3") return Disposition::PermanentStage3;
  if (s == "NoEffect") return Disposition::NoEffect;
  throw ModelError("unknown disposition: " + s);
}

std::string TraceEvent::to_json_line() const {
  nlohmann::json j;
  j["t"] = t;
  j["epoch"] = epoch;
  j["type"] = type;
  if (tile >= 0) j["tile"] = tile;
  if (!thread.empty()) j["thread"] = thread;
  for (const auto& [k, v] : num) j[k] = v;
  for (const auto& [k, v] : str) j[k] = v;
  return j.dump();
}

TraceEvent TraceEvent::from_json_line(const std::string& line) {
  nlohmann::json j = nlohmann::json::parse(line);
  TraceEvent ev;
  ev.t = j.at("t").get<SimTime>();
  ev.epoch = j.at("epoch").get<Epoch>();
  ev.type = j.at("type").get<std::string>();
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k == "t" || k == "epoch" || k == "type") continue;
    if (k == "tile") {
      ev.tile = it->get<TileId>();
    } else if (k == "thread") {
      ev.thread = it->get<ThreadId>();
    } else if (it->is_number_integer()) {
      ev.num[k] = it->get<std::int64_t>();
    } else {
      ev.str[k] = it->get<std::string>();
    }
  }
  return ev;
}

void Trace::write_ndjson(std::ostream& os) const {
  for (const auto& ev : events_) os << ev.to_json_line() << '\n';
}

std::vector<TraceEvent> Trace::read_ndjson(std::istream& is) {
  std::vector<TraceEvent> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    out.push_back(TraceEvent::from_json_line(line));
  }
  return out;
}

}  // namespace lspool
