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

#include "lspool/common.hpp"

namespace lspool {

/// One checkpoint record in a tile's validation memory.
struct ValidationEntry {
  Digest checksum = 0;
  Epoch epoch = 0;
  /// Tiles this tile disagrees with for the thread, as of `epoch`.
  std::set<TileId> disagreement_flags;

  bool operator==(const ValidationEntry&) const = default;
};

/// Per-tile dual-port memory holding checkpoint checksums. Locally writable,
/// globally read-only: every write asserts the writer is the owner.
class ValidationMemory {
 public:
  ValidationMemory() = default;
  explicit ValidationMemory(TileId owner) : owner_(owner) {}

  TileId owner() const { return owner_; }

  /// Write-locality invariant: only the owner tile may mutate entries.
  void write(TileId writer, const ThreadId& thread, const ValidationEntry& entry) {
    if (writer != owner_)
      throw ModelError("validation memory of tile " + std::to_string(owner_) +
                       " written by tile " + std::to_string(writer));
    entries_[thread] = entry;
  }

  void erase(TileId writer, const ThreadId& thread) {
    if (writer != owner_)
      throw ModelError("validation memory of tile " + std::to_string(owner_) +
                       " written by tile " + std::to_string(writer));
    entries_.erase(thread);
  }

  /// Read port, available to every tile. nullptr when no entry exists.
  const ValidationEntry* find(const ThreadId& thread) const {
    auto it = entries_.find(thread);
    return it == entries_.end() ? nullptr : &it->second;
  }

  const std::map<ThreadId, ValidationEntry>& entries() const { return entries_; }

 private:
  TileId owner_ = -1;
  std::map<ThreadId, ValidationEntry> entries_;
};

}  // namespace lspool
