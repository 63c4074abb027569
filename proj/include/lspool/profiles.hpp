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
#include <optional>
#include <string>
#include <vector>

#include "lspool/types.hpp"

namespace lspool {

/// Operator-chosen trade between speed, energy and robustness: per
/// criticality class, the ordered list of execution modes a thread may run
/// in, strongest first.
struct PerformanceProfile {
  std::string name;
  /// Allowed modes per class, strictly decreasing replication factor.
  /// Never contains Descheduled; descheduling is a Stage-3 last resort for
  /// non-Essential threads, not an execution mode an operator assigns.
  std::map<Criticality, std::vector<Mode>> allowed;
  /// Optional energy-rate ceiling in milliwatts.
  std::optional<long long> power_budget_mw;
  /// Replication for NMR (>= 4).
  int nmr_n = 4;

  bool operator==(const PerformanceProfile&) const = default;

  const std::vector<Mode>& allowed_for(Criticality c) const;
  Mode strongest(Criticality c) const { return allowed_for(c).front(); }
  Mode weakest(Criticality c) const { return allowed_for(c).back(); }

  /// Throws ModelError if a list is empty, not strictly decreasing, lists
  /// Descheduled, or Essential's list is missing.
  void validate() const;
};

/// The four built-in profiles (Speed, Energy, Robustness, Function).
const std::vector<PerformanceProfile>& builtin_profiles();

/// Lookup by name; nullptr if not built in.
const PerformanceProfile* find_builtin_profile(const std::string& name);

}  // namespace lspool
