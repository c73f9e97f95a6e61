// Copyright 2026 The adaptdiv Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "adaptdiv/redundancy.hpp"

#include <algorithm>

namespace adaptdiv {

void NmrConfig::validate() const {
  if (n < 2) throw ConfigError("NMR needs at least two cores");
  if (m < 1 || m > n) throw ConfigError("NMR needs 1 <= m <= n");
}

ReplicaSlot ReplicaSlot::make(CoreIndex core, const Program& program,
                              const DiversityConfig& config) {
  return {core, config, std::make_shared<const MachineImage>(assemble(program, config))};
}

std::vector<ReplicaSlot> default_slots(const Program& program, const NmrConfig& nmr) {
  nmr.validate();
  const auto img = std::make_shared<const MachineImage>(assemble(program));
  std::vector<ReplicaSlot> slots;
  for (std::size_t c = 0; c < nmr.n; ++c)
    slots.push_back({static_cast<CoreIndex>(c), DiversityConfig{}, img});
  return slots;
}

ReplicaResults execute_replicas(std::span<const Word> input,
                                std::span<const ReplicaSlot> slots,
                                const std::map<CoreIndex, FaultPlan>& faults,
                                Cycle cycle_limit) {
  static const FaultPlan kNoFaults;
  ReplicaResults out;
  for (const auto& slot : slots) {
    const auto it = faults.find(slot.core);
    const FaultPlan& plan = it == faults.end() ? kNoFaults : it->second;
    if (plan.core() && *plan.core() != slot.core)
      throw ConfigError("fault plan attached to the wrong core");
    ExecutionOutcome raw;
    auto canon = run_canonical(*slot.image, slot.config, input, plan, cycle_limit, &raw);
    if (canon)
      out.emplace(slot.core, std::move(*canon));
    else
      out.emplace(slot.core, ReplicaFailure{raw.status, raw.reason});
  }
  return out;
}

VoteResult vote(const ReplicaResults& outputs, std::size_t m) {
  if (outputs.size() < m || m == 0) throw ConfigError("vote needs at least m outputs");
  // Groups in order of their lowest member.
  std::vector<std::pair<const std::vector<Word>*, std::vector<CoreIndex>>> groups;
  for (const auto& [core, r] : outputs) {
    const auto* v = std::get_if<std::vector<Word>>(&r);
    if (!v) continue;
    auto g = std::find_if(groups.begin(), groups.end(),
                          [&](const auto& e) { return *e.first == *v; });
    if (g == groups.end())
      groups.push_back({v, {core}});
    else
      g->second.push_back(core);
  }
  const std::pair<const std::vector<Word>*, std::vector<CoreIndex>>* best = nullptr;
  for (const auto& g : groups)
    if (!best || g.second.size() > best->second.size()) best = &g;
  if (!best || best->second.size() < m) return NoMajority{outputs};
  Consensus c{*best->first, {}};
  for (const auto& [core, r] : outputs)
    if (!std::binary_search(best->second.begin(), best->second.end(), core))
      c.dissenters.push_back(core);
  return c;
}

bool has_mismatch(const VoteResult& v) {
  if (const auto* c = std::get_if<Consensus>(&v)) return !c->dissenters.empty();
  return true;
}

}  // namespace adaptdiv
