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
#include <stdexcept>
#include <string>

namespace lspool {

/// Simulated time in integer microseconds. All event ordering and metric
/// accounting is done in exact integer arithmetic; there is no float time.
using SimTime = std::int64_t;

constexpr SimTime kUsPerMs = 1000;
constexpr SimTime kUsPerSecond = 1'000'000;

using TileId = int;
using ThreadId = std::string;
using Epoch = std::uint64_t;

/// Opaque fixed-width state checksum exposed through validation memory.
using Digest = std::uint64_t;

/// splitmix64 finalizer. Used to derive replica state digests and fault
/// perturbations; any well-mixed 64-bit function would do, the voting
/// logic only relies on equality.
constexpr Digest mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// FNV-1a over a string, for seeding per-thread digest streams.
constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Canonical (fault-free) digest of a thread's state vector at a checkpoint.
/// Uniform address layout makes this tile-independent, so an uncorrupted
/// replica produces the same digest on any tile.
inline Digest canonical_digest(const ThreadId& thread, Epoch epoch) {
  return mix64(fnv1a(thread) ^ (epoch * 0xd1342543de82ef95ULL));
}

/// Scenario or programming inconsistency (unknown ids, broken invariants).
class ModelError : public std::logic_error {
 public:
  explicit ModelError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace lspool
