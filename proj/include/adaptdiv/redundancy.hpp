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

#pragma once

#include <map>
#include <memory>
#include <variant>
#include <vector>

#include "adaptdiv/diversity.hpp"

namespace adaptdiv {

struct NmrConfig {
  std::size_t n = 3;
  std::size_t m = 2;
  static NmrConfig majority(std::size_t n) { return {n, (n + 1) / 2}; }
  void validate() const;  // throws ConfigError
};

struct ReplicaSlot {
  CoreIndex core = 0;
  DiversityConfig config;
  std::shared_ptr<const MachineImage> image;

  static ReplicaSlot make(CoreIndex core, const Program& program,
                          const DiversityConfig& config);
};

std::vector<ReplicaSlot> default_slots(const Program& program, const NmrConfig& nmr);

// Marker for a replica that crashed or timed out.
struct ReplicaFailure {
  Status status = Status::Crashed;
  CrashReason reason = CrashReason::None;
  bool operator==(const ReplicaFailure&) const = default;
};

using ReplicaResult = std::variant<std::vector<Word>, ReplicaFailure>;
using ReplicaResults = std::map<CoreIndex, ReplicaResult>;

ReplicaResults execute_replicas(std::span<const Word> input,
                                std::span<const ReplicaSlot> slots,
                                const std::map<CoreIndex, FaultPlan>& faults,
                                Cycle cycle_limit = kDefaultCycleLimit);

struct Consensus {
  std::vector<Word> value;
  std::vector<CoreIndex> dissenters;  // ascending
  bool operator==(const Consensus&) const = default;
};

struct NoMajority {
  ReplicaResults values;
  bool operator==(const NoMajority&) const = default;
};

using VoteResult = std::variant<Consensus, NoMajority>;

// Bit-exact grouping; failures join no group. If two groups reach m (even
// n only), the group holding the lowest core index wins.
VoteResult vote(const ReplicaResults& outputs, std::size_t m);

bool has_mismatch(const VoteResult& v);

}  // namespace adaptdiv
