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

#include "lspool/mapping.hpp"

namespace lspool {

const char* to_string(MappingEdit::Kind k) {
  switch (k) {
    case MappingEdit::Kind::Migrate: return "Migrate";
    case MappingEdit::Kind::ReduceMode: return "ReduceMode";
    case MappingEdit::Kind::SetShare: return "SetShare";
    case MappingEdit::Kind::SetFreq: return "SetFreq";
    case MappingEdit::Kind::Gate: return "Gate";
    case MappingEdit::Kind::Ungate: return "Ungate";
    case MappingEdit::Kind::Deschedule: return "Deschedule";
  }
  return "?";
}

const char* to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::PruneLowCriticality: return "PruneLowCriticality";
    case StrategyKind::FrequencyIncrease: return "FrequencyIncrease";
    case StrategyKind::TimeShareReduction: return "TimeShareReduction";
    case StrategyKind::Hybrid: return "Hybrid";
  }
  return "?";
}

}  // namespace lspool
