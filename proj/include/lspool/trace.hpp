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
#include <iosfwd>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "lspool/common.hpp"

namespace lspool {

/// Terminal disposition of an injected fault. Every fault gets exactly one.
enum class Disposition { Masked, CorrectedStage1, RepairedStage2, PermanentStage3, NoEffect };

const char* to_string(Disposition d);
Disposition disposition_from_string(const std::string& s);

/// One simulation trace record. Every event carries (time, epoch, type,
/// subject ids); the detail map holds event-specific integer/string fields.
/// Serialized as newline-delimited JSON with sorted keys, so equal event
/// streams are byte-identical.
struct TraceEvent {
  SimTime t = 0;
  Epoch epoch = 0;
  std::string type;
  /// -1 when the event has no tile subject.
  TileId tile = -1;
  /// Empty when the event has no thread subject.
  ThreadId thread;
  std::map<std::string, std::int64_t> num;
  std::map<std::string, std::string> str;

  std::string to_json_line() const;
  static TraceEvent from_json_line(const std::string& line);

  bool operator==(const TraceEvent&) const = default;
};

/// Append-only event sink shared by all stages of one engine run.
class Trace {
 public:
  TraceEvent& emit(SimTime t, Epoch epoch, std::string type) {
    events_.push_back(TraceEvent{t, epoch, std::move(type), -1, {}, {}, {}});
    return events_.back();
  }

  const std::vector<TraceEvent>& events() const { return events_; }
  std::vector<TraceEvent>& events() { return events_; }

  void write_ndjson(std::ostream& os) const;
  static std::vector<TraceEvent> read_ndjson(std::istream& is);

 private:
  std::vector<TraceEvent> events_;
};

}  // namespace lspool
