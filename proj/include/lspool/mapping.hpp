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

#include <map>
#include <set>
#include <string>
#include <vector>

#include "lspool/types.hpp"

namespace lspool {

/// Per-thread placement: execution mode, hosting tiles, and the time share
/// contracted on each host. The share is uniform across siblings so that
/// equivalent work is conducted on every replica; 100 = full demand.
/// Shares move in steps of 25 and never drop below 25.
struct Assignment {
  Mode mode = Mode::Descheduled;
  std::set<TileId> tiles;
  int share_pct = 100;

  bool operator==(const Assignment&) const = default;
};

/// Thread-to-tile assignment for the whole system.
struct SystemMapping {
  std::map<ThreadId, Assignment> assignments;
  /// Tiles not clock-gated. Gated tiles stay in the spare pool but host
  /// nothing and draw no power.
  std::set<TileId> active_tiles;

  bool operator==(const SystemMapping&) const = default;

  const Assignment* find(const ThreadId& t) const {
    auto it = assignments.find(t);
    return it == assignments.end() ? nullptr : &it->second;
  }
};

/// One mapping edit inside a replacement-strategy delta.
struct MappingEdit {
  enum class Kind {
    /// Move one replica of `thread` from tile `a` to tile `b`.
    Migrate,
    /// Reduce `thread` to `mode`, dropping its replicas on `drop_tiles`.
    ReduceMode,
    /// Set `thread`'s time share to `value` percent on all its hosts.
    SetShare,
    /// Set tile `a`'s frequency level to `value` percent.
    SetFreq,
    /// Clock-gate tile `a` (must be idle at application time).
    Gate,
    /// Return tile `a` to the active pool.
    Ungate,
    /// Stop executing `thread` entirely.
    Deschedule,
  };

  Kind kind;
  ThreadId thread;
  TileId a = -1;
  TileId b = -1;
  Mode mode = Mode::Descheduled;
  int value = 0;
  std::vector<TileId> drop_tiles;

  bool operator==(const MappingEdit&) const = default;
};

const char* to_string(MappingEdit::Kind k);

enum class StrategyKind { PruneLowCriticality, FrequencyIncrease, TimeShareReduction, Hybrid };

const char* to_string(StrategyKind k);

/// Precomputed response to the permanent failure of one specific tile:
/// the ordered mapping edits that restore allowed modes for Essential/High
/// threads once `for_tile` is gone. Computed in the background before the
/// fault happens, applied at the checkpoint boundary after it.
struct ReplacementStrategy {
  TileId for_tile = -1;
  StrategyKind kind = StrategyKind::PruneLowCriticality;
  bool feasible = false;
  std::vector<MappingEdit> delta;
  /// Modeled energy rate (uW) of the post-application mapping; used for the
  /// deterministic strategy tie-break.
  long long energy_rate_uw = 0;
  int migrations = 0;
};

}  // namespace lspool
