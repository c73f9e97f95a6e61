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

#include "doctest.h"

#include <set>

#include "adaptdiv/benchmarks.hpp"
#include "adaptdiv/controller.hpp"

using namespace adaptdiv;

namespace {

VoteResult dissent(std::vector<CoreIndex> d) { return Consensus{{1}, std::move(d)}; }
VoteResult agree() { return Consensus{{1}, {}}; }

HealthMap counters(std::initializer_list<std::pair<CoreIndex, std::uint32_t>> v) {
  HealthMap h;
  for (auto [c, n] : v) h[c] = CoreHealth{n, 0};
  return h;
}

const Program& bitcount() { return find_benchmark("bitcount").program; }

}  // namespace

TEST_CASE("threshold is strictly exceeded") {
  const Thresholds t;
  auto r = on_vote_result(phase::Normal{}, counters({{0, 0}, {1, 2}, {2, 0}}), dissent({1}), t);
  CHECK(r.health[1].error_counter == 3);
  CHECK(std::holds_alternative<phase::Normal>(r.phase));
  CHECK(r.actions.empty());
  r = on_vote_result(phase::Normal{}, counters({{0, 0}, {1, 3}, {2, 0}}), dissent({1}), t);
  CHECK(r.phase == RecoveryPhase{phase::DynamicAdaptation{1, 1}});
  REQUIRE(r.actions.size() == 1);
  CHECK(std::get<action::ReconfigureDynamic>(r.actions[0]).attempt == 1);
}

TEST_CASE("correct result resets the counter") {
  const auto r = on_vote_result(phase::Normal{}, counters({{0, 0}, {1, 2}, {2, 0}}), agree(), {});
  CHECK(r.health.at(1).error_counter == 0);
}

TEST_CASE("no majority raises an alarm without a transition") {
  const auto h = counters({{0, 1}, {1, 1}, {2, 0}});
  const auto r = on_vote_result(phase::Normal{}, h, NoMajority{}, {});
  CHECK(std::holds_alternative<phase::Normal>(r.phase));
  CHECK(r.health == h);
  REQUIRE(r.actions.size() == 1);
  CHECK(std::holds_alternative<action::RaiseAlarm>(r.actions[0]));
}

TEST_CASE("escalation and recovery exits") {
  const Thresholds t;
  auto r = on_vote_result(phase::DynamicAdaptation{1, t.max_dynamic_attempts},
                          counters({{0, 0}, {1, 9}, {2, 0}}), dissent({1}), t);
  CHECK(r.phase == RecoveryPhase{phase::SelfTesting{1}});
  CHECK(r.actions == std::vector<Action>{action::RunSelfTests{1}});

  r = on_vote_result(phase::DynamicAdaptation{1, 2}, counters({{0, 0}, {1, 9}, {2, 0}}),
                     dissent({1}), t);
  CHECK(r.phase == RecoveryPhase{phase::DynamicAdaptation{1, 3}});

  RecoveryPhase p = phase::DynamicAdaptation{1, 2};
  HealthMap h = counters({{0, 0}, {1, 5}, {2, 0}});
  for (std::uint32_t i = 0; i < t.threshold_dynamic; ++i) {
    CHECK(phase_kind(p) == PhaseKind::DynamicAdaptation);
    auto s = on_vote_result(p, h, agree(), t);
    p = s.phase;
    h = s.health;
  }
  CHECK(std::holds_alternative<phase::Normal>(p));
}

TEST_CASE("self-test report handling") {
  const FaultDefinition reg{RegisterStuckBit{5, 3, 1}, "register-walk"};
  auto r = on_selftest_report(phase::SelfTesting{1}, {}, {reg});
  CHECK(r.phase == RecoveryPhase{phase::AwaitingVariant{1, reg}});
  CHECK(r.actions == std::vector<Action>{action::RequestVariant{1, reg}});

  r = on_selftest_report(phase::SelfTesting{1}, {}, {});
  CHECK(r.phase == RecoveryPhase{phase::Fallback{1, FallbackReason::NoFaultFound}});

  const FaultDefinition mem{MemoryStuckBit{0x10, 0, 0}, "march"};
  const FaultDefinition reg2{RegisterStuckBit{2, 0, 0}, "register-walk"};
  r = on_selftest_report(phase::SelfTesting{0}, {}, {mem, reg, reg2});
  CHECK(std::get<phase::AwaitingVariant>(r.phase).fault == reg2);
}

TEST_CASE("variant handling") {
  const FaultDefinition reg{RegisterStuckBit{5, 3, 1}, "register-walk"};
  DiversityConfig v;
  v.static_.excluded_registers = {5};
  auto h = counters({{0, 0}, {1, 7}, {2, 1}});
  auto r = on_variant(phase::AwaitingVariant{1, reg}, h, v);
  CHECK(std::holds_alternative<phase::Normal>(r.phase));
  CHECK(r.health.at(1) == CoreHealth{});
  CHECK(r.health.at(2) == h.at(2));
  CHECK(r.actions == std::vector<Action>{action::DeployVariant{1, v}});
  r = on_variant(phase::AwaitingVariant{1, reg}, h, std::nullopt);
  CHECK(r.phase == RecoveryPhase{phase::Fallback{1, FallbackReason::GenerationFailed}});
}

TEST_CASE("schedule head") {
  const Thresholds t;
  AdaptationHistory h;
  h.entries[1] = {AdaptationEntry{DiversityConfig{}, {}}};
  auto c = next_dynamic_config(bitcount(), 1, h, 7, t);
  DiversityConfig expect;
  expect.dynamic.gap_size = 1;
  CHECK(c == expect);
  h.entries[1].push_back({c, {}});
  c = next_dynamic_config(bitcount(), 1, h, 7, t);
  CHECK(c.dynamic.gap_size == 2);
  CHECK(c.dynamic.base_offset == 0);
}

TEST_CASE("schedule cycles knobs and never repeats") {
  Thresholds t;
  t.max_dynamic_attempts = 14;
  AdaptationHistory h;
  h.entries[0] = {AdaptationEntry{DiversityConfig{}, {}}};
  std::set<DiversityConfig> seen{DiversityConfig{}};
  for (std::uint32_t a = 1; a <= t.max_dynamic_attempts; ++a) {
    const auto prev = h.entries[0].back().config;
    const auto c = next_dynamic_config(bitcount(), 0, h, 3, t);
    CHECK(seen.insert(c).second);
    CHECK(c.static_ == prev.static_);
    const auto slot = (a - 1) % 7;
    if (slot < 4) CHECK(c.dynamic.gap_size == prev.dynamic.gap_size * 2 + (prev.dynamic.gap_size == 0));
    if (slot == 4) CHECK(c.dynamic.base_offset != prev.dynamic.base_offset);
    if (slot == 5) CHECK(c.dynamic.variable_order_seed != prev.dynamic.variable_order_seed);
    if (slot == 6) CHECK(c.dynamic.reexpr_key != prev.dynamic.reexpr_key);
    h.entries[0].push_back({c, {}});
  }
  CHECK_THROWS_AS(next_dynamic_config(bitcount(), 0, h, 3, t), ScheduleExhausted);
}

TEST_CASE("key knob falls back to base offset without a family") {
  const auto p = parse_program(".in 1\n.out 1\nLOAD r1, in\nSTORE r1, out\nHALT\n", "copy");
  AdaptationHistory h;
  h.entries[0] = {AdaptationEntry{DiversityConfig{}, {}}};
  for (int a = 0; a < 6; ++a) h.entries[0].push_back({next_dynamic_config(p, 0, h, 1, {}), {}});
  const auto prev = h.entries[0].back().config;
  const auto c = next_dynamic_config(p, 0, h, 1, {});
  CHECK(!c.dynamic.reexpr_key);
  CHECK(c.dynamic.base_offset != prev.dynamic.base_offset);
}

TEST_CASE("controller resolves configs and keeps a log") {
  Controller ctl(bitcount(), 3, Thresholds{}, 11);
  for (int i = 0; i < 4; ++i) ctl.on_vote(dissent({2}), i);
  CHECK(ctl.phase() == RecoveryPhase{phase::DynamicAdaptation{2, 1}});
  const auto& last = ctl.events().back();
  const auto& rc = std::get<action::ReconfigureDynamic>(last.actions.at(0));
  REQUIRE(rc.config);
  CHECK(rc.config->dynamic.gap_size == 1);
  CHECK(ctl.config(2) == *rc.config);
  CHECK(ctl.config(0) == DiversityConfig{});
  CHECK(ctl.history().entries.at(2).size() == 2);
  for (int i = 0; i < 3; ++i) ctl.on_vote(agree(), 10 + i);
  CHECK(std::holds_alternative<phase::Normal>(ctl.phase()));
  CHECK(ctl.events().size() == 7);
}

TEST_CASE("exhaustive edge enumeration matches the allowed graph") {
  const Thresholds t{2, 3, 0.95};
  const FaultDefinition reg{RegisterStuckBit{5, 3, 1}, "register-walk"};
  std::vector<RecoveryPhase> phases{phase::Normal{},
                                    phase::DynamicAdaptation{1, 1},
                                    phase::DynamicAdaptation{1, 3},
                                    phase::SelfTesting{1},
                                    phase::AwaitingVariant{1, reg},
                                    phase::Fallback{1, FallbackReason::NoFaultFound}};
  std::vector<HealthMap> healths;
  for (std::uint32_t a = 0; a < 5; ++a)
    for (std::uint32_t ok = 0; ok < 3; ++ok) {
      HealthMap h = counters({{0, 0}, {1, a}, {2, 0}});
      h[1].consecutive_ok = ok;
      healths.push_back(h);
    }
  std::vector<VoteResult> votes{agree(), dissent({1}), dissent({0}), dissent({0, 1}), NoMajority{}};
  std::set<std::pair<PhaseKind, PhaseKind>> edges;
  for (const auto& p : phases)
    for (const auto& h : healths) {
      for (const auto& v : votes) {
        const auto r = on_vote_result(p, h, v, t);
        edges.insert({phase_kind(p), phase_kind(r.phase)});
      }
      for (const auto& rep : {std::vector<FaultDefinition>{}, std::vector<FaultDefinition>{reg}})
        edges.insert({phase_kind(p), phase_kind(on_selftest_report(p, h, rep).phase)});
      for (const auto& var : {std::optional<DiversityConfig>{}, std::optional<DiversityConfig>{DiversityConfig{}}})
        edges.insert({phase_kind(p), phase_kind(on_variant(p, h, var).phase)});
    }
  using K = PhaseKind;
  const std::set<std::pair<K, K>> expected{
      {K::Normal, K::Normal},
      {K::Normal, K::DynamicAdaptation},
      {K::DynamicAdaptation, K::DynamicAdaptation},
      {K::DynamicAdaptation, K::Normal},
      {K::DynamicAdaptation, K::SelfTesting},
      {K::SelfTesting, K::SelfTesting},
      {K::SelfTesting, K::AwaitingVariant},
      {K::SelfTesting, K::Fallback},
      {K::AwaitingVariant, K::AwaitingVariant},
      {K::AwaitingVariant, K::Normal},
      {K::AwaitingVariant, K::Fallback},
      {K::Fallback, K::Fallback}};
  CHECK(edges == expected);
  for (auto [a, b] : edges) CHECK(is_allowed_edge(a, b));
  CHECK(!is_allowed_edge(K::Normal, K::SelfTesting));
}

TEST_CASE("transient single error never leaves normal") {
  const Thresholds t;
  RecoveryPhase p = phase::Normal{};
  HealthMap h = counters({{0, 0}, {1, 0}, {2, 0}});
  auto r = on_vote_result(p, h, dissent({1}), t);
  for (int i = 0; i < 5; ++i) r = on_vote_result(r.phase, r.health, agree(), t);
  CHECK(std::holds_alternative<phase::Normal>(r.phase));
  CHECK(r.health.at(1).error_counter == 0);
}
