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

#include "lspool/types.hpp"

namespace lspool {

const char* to_string(Criticality c) {
  switch (c) {
    case Criticality::Essential: return "Essential";
    case Criticality::High: return "High";
    case Criticality::Medium: return "Medium";
    case Criticality::Low: return "Low";
  }
  return "?";
}

Criticality criticality_from_string(const std::string& s) {
  if (s == "Essential") return Criticality::Essential;
  if (s == "High") return Criticality::High;
  if (s == "Medium") return Criticality::Medium;
  if (s == "Low") return Criticality::Low;
  throw ModelError("unknown criticality class: " + s);
}

const char* to_string(Mode m) {
  switch (m) {
    case Mode::NMR: return "NMR";
    case Mode::TMR: return "TMR";
    case Mode::DMR: return "DMR";
    case Mode::Separate: return "Separate";
    case Mode::Descheduled: return "Descheduled";
  }
  return "?";
}

Mode mode_from_string(const std::string& s) {
  if (s == "NMR") return Mode::NMR;
  if (s == "TMR") return Mode::TMR;
  if (s == "DMR") return Mode::DMR;
  if (s == "Separate") return Mode::Separate;
  if (s == "Descheduled") return Mode::Descheduled;
  throw ModelError("unknown execution mode: " + s);
}

const char* to_string(TileHealth h) {
  switch (h) {
    case TileHealth::Healthy: return "Healthy";
    case TileHealth::Suspect: return "Suspect";
    case TileHealth::Reconfiguring: return "Reconfiguring";
    case TileHealth::PermanentlyDefective: return "PermanentlyDefective";
    case TileHealth::ClockGated: return "ClockGated";
  }
  return "?";
}

}  // namespace lspool
