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
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "adaptdiv/redundancy.hpp"

namespace adaptdiv {

struct CoreHealth {
  std::uint32_t error_counter = 0;
  std::uint32_t consecutive_ok = 0;
  bool operator==(const CoreHealth&) const = default;
};

using HealthMap = std::map<CoreIndex, CoreHealth>;

struct Thresholds {
  std::uint32_t threshold_dynamic = 3;
  std::uint32_t max_dynamic_attempts = 8;
  double coverage_threshold = 0.95;
  void validate() const;  // throws ConfigError
  bool operator==(const Thresholds&) const = default;
};

enum class FallbackReason : std::uint8_t { NoFaultFound, GenerationFailed };
std::string_view to_string(FallbackReason r);

namespace phase {
struct Normal {
  bool operator==(const Normal&) const = default;
};
struct DynamicAdaptation {
  CoreIndex core = 0;
  std::uint32_t attempt = 1;
  bool operator==(const DynamicAdaptation&) const = default;
};
struct SelfTesting {
  CoreIndex core = 0;
  bool operator==(const SelfTesting&) const = default;
};
struct AwaitingVariant {
  CoreIndex core = 0;
  FaultDefinition fault;
  bool operator==(const AwaitingVariant&) const = default;
};
struct Fallback {
  CoreIndex core = 0;
  FallbackReason reason = FallbackReason::NoFaultFound;
  bool operator==(const Fallback&) const = default;
};
}  // namespace phase

using RecoveryPhase = std::variant<phase::Normal, phase::DynamicAdaptation,
                                   phase::SelfTesting, phase::AwaitingVariant,
                                   phase::Fallback>;

enum class PhaseKind : std::uint8_t {
  Normal,
  DynamicAdaptation,
  SelfTesting,
  AwaitingVariant,
  Fallback
};
PhaseKind phase_kind(const RecoveryPhase& p);
std::string_view to_string(PhaseKind k);
std::optional<CoreIndex> phase_core(const RecoveryPhase& p);
// Kind-level edges the state machine may take.
bool is_allowed_edge(PhaseKind from, PhaseKind to);

namespace action {
struct ReconfigureDynamic {
  CoreIndex core = 0;
  std::uint32_t attempt = 1;
  std::optional<DiversityConfig> config;  // filled in by the strategy
  bool operator==(const ReconfigureDynamic&) const = default;
};
struct RunSelfTests {
  CoreIndex core = 0;
  bool operator==(const RunSelfTests&) const = default;
};
struct RequestVariant {
  CoreIndex core = 0;
  FaultDefinition fault;
  bool operator==(const RequestVariant&) const = default;
};
struct DeployVariant {
  CoreIndex core = 0;
  DiversityConfig config;
  bool operator==(const DeployVariant&) const = default;
};
struct EpisodeClosed {
  CoreIndex core = 0;
  bool operator==(const EpisodeClosed&) const = default;
};
struct RaiseAlarm {
  std::optional<CoreIndex> core;
  std::string reason;
  bool operator==(const RaiseAlarm&) const = default;
};
}  // namespace action

using Action = std::variant<action::ReconfigureDynamic, action::RunSelfTests,
                            action::RequestVariant, action::DeployVariant,
                            action::EpisodeClosed, action::RaiseAlarm>;
std::string describe(const Action& a);

struct Transition {
  RecoveryPhase phase;
  HealthMap health;
  std::vector<Action> actions;
};

// Pure transition functions of the recovery state machine.
Transition on_vote_result(const RecoveryPhase& phase, const HealthMap& health,
                          const VoteResult& vote, const Thresholds& t);
Transition on_selftest_report(const RecoveryPhase& phase, const HealthMap& health,
                              std::vector<FaultDefinition> report);
Transition on_variant(const RecoveryPhase& phase, const HealthMap& health,
                      const std::optional<DiversityConfig>& variant);

struct AdaptationEntry {
  DiversityConfig config;
  std::vector<std::uint32_t> error_counters;  // observed while config was live
};

// Per-core configs tried in the current episode; entry 0 is the config that
// was live when the episode opened.
struct AdaptationHistory {
  std::map<CoreIndex, std::vector<AdaptationEntry>> entries;
};

// Schedule: gap doubling (four steps), base offset, variable order, re-
// expression key, cycling; one knob per attempt. Throws ScheduleExhausted.
DiversityConfig next_dynamic_config(const Program& program, CoreIndex core,
                                    const AdaptationHistory& history, Seed seed,
                                    const Thresholds& thresholds);

class AdaptationStrategy {
 public:
  virtual ~AdaptationStrategy() = default;
  virtual DiversityConfig next(const Program& program, CoreIndex core,
                               const AdaptationHistory& history, Seed seed,
                               const Thresholds& thresholds) = 0;
};

class ScheduleStrategy final : public AdaptationStrategy {
 public:
  DiversityConfig next(const Program& program, CoreIndex core,
                       const AdaptationHistory& history, Seed seed,
                       const Thresholds& thresholds) override {
    return next_dynamic_config(program, core, history, seed, thresholds);
  }
};

struct ControllerEvent {
  std::uint64_t round = 0;
  std::string trigger;  // vote, selftest, variant
  PhaseKind from = PhaseKind::Normal;
  PhaseKind to = PhaseKind::Normal;
  RecoveryPhase phase;
  HealthMap health;
  std::vector<Action> actions;
};

class Controller {
 public:
  Controller(const Program& program, std::size_t cores, Thresholds thresholds,
             Seed seed, std::unique_ptr<AdaptationStrategy> strategy = nullptr);

  std::vector<Action> on_vote(const VoteResult& vote, std::uint64_t round);
  std::vector<Action> on_selftest_report(std::vector<FaultDefinition> report,
                                         std::uint64_t round);
  std::vector<Action> on_variant(const std::optional<DiversityConfig>& variant,
                                 std::uint64_t round);

  const RecoveryPhase& phase() const { return phase_; }
  const HealthMap& health() const { return health_; }
  const AdaptationHistory& history() const { return history_; }
  const std::vector<ControllerEvent>& events() const { return events_; }
  const DiversityConfig& config(CoreIndex core) const { return configs_.at(core); }

 private:
  std::vector<Action> apply(Transition t, const std::string& trigger,
                            std::uint64_t round);

  const Program* program_;
  Thresholds thresholds_;
  Seed seed_;
  std::unique_ptr<AdaptationStrategy> strategy_;
  RecoveryPhase phase_;
  HealthMap health_;
  std::map<CoreIndex, DiversityConfig> configs_;
  AdaptationHistory history_;
  std::vector<ControllerEvent> events_;
  std::uint64_t episode_ = 0;
};

}  // namespace adaptdiv
