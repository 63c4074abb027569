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

#include "lspool/profiles.hpp"

namespace lspool {

const std::vector<Mode>& PerformanceProfile::allowed_for(Criticality c) const {
  auto it = allowed.find(c);
  if (it == allowed.end())
    throw ModelError("profile '" + name + "' has no mode list for class " +
                     std::string(to_string(c)));
  return it->second;
}

void PerformanceProfile::validate() const {
  if (nmr_n < 4) throw ModelError("profile '" + name + "': NMR replication must be >= 4");
  if (!allowed.count(Criticality::Essential))
    throw ModelError("profile '" + name + "': Essential class has no mode list");
  for (const auto& [cls, modes] : allowed) {
    if (modes.empty())
      throw ModelError("profile '" + name + "': empty mode list for class " +
                       std::string(to_string(cls)));
    int prev = -1;
    for (Mode m : modes) {
      if (m == Mode::Descheduled)
        throw ModelError("profile '" + name + "': Descheduled is not an assignable mode");
      int rf = replication_factor(m, nmr_n);
      if (prev >= 0 && rf >= prev)
        throw ModelError("profile '" + name + "': mode list for class " +
                         std::string(to_string(cls)) +
                         " is not strictly decreasing in replication factor");
      prev = rf;
    }
  }
}

namespace {

PerformanceProfile make_profile(
    std::string name, std::vector<Mode> e, std::vector<Mode> h, std::vector<Mode> m,
    std::vector<Mode> l) {
  PerformanceProfile p;
  p.name = std::move(name);
  p.allowed[Criticality::Essential] = std::move(e);
  p.allowed[Criticality::High] = std::move(h);
  p.allowed[Criticality::Medium] = std::move(m);
  p.allowed[Criticality::Low] = std::move(l);
  p.validate();
  return p;
}

}  // namespace

const std::vector<PerformanceProfile>& builtin_profiles() {
  using enum Mode;
  static const std::vector<PerformanceProfile> profiles = {
      make_profile("Speed", {TMR}, {TMR, DMR}, {TMR, DMR}, {TMR, DMR, Separate}),
      make_profile("Energy", {TMR}, {TMR}, {TMR, DMR}, {DMR, Separate}),
      make_profile("Robustness", {NMR}, {NMR, TMR}, {TMR, DMR}, {TMR, DMR}),
      make_profile("Function", {NMR, TMR}, {NMR, TMR}, {TMR, DMR}, {TMR, DMR, Separate}),
  };
  return profiles;
}

const PerformanceProfile* find_builtin_profile(const std::string& name) {
  for (const auto& p : builtin_profiles())
    if (p.name == name) return &p;
  return nullptr;
}

}  // namespace lspool
