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

#include "adaptdiv/controller.hpp"

#include <algorithm>
#include <array>

#include "adaptdiv/rng.hpp"

namespace adaptdiv {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

enum class Knob : std::uint8_t { Gap, Base, Order, Key };
constexpr std::array<Knob, 7> kSchedule{Knob::Gap,  Knob::Gap,   Knob::Gap, Knob::Gap,
                                        Knob::Base, Knob::Order, Knob::Key};

bool contains(const std::vector<CoreIndex>& v, CoreIndex c) {
  return std::find(v.begin(), v.end(), c) != v.end();
}

bool layout_fits(const Program& p, const DynamicParams& d) {
  try {
    derive_layout(p, d);
    return true;
  } catch (const LayoutOverflow&) {
    return false;
  }
}

}  // namespace

void Thresholds::validate() const {
  if (threshold_dynamic < 1 || max_dynamic_attempts < 1)
    throw ConfigError("thresholds must be at least 1");
  if (!(coverage_threshold > 0.0 && coverage_threshold <= 1.0))
    throw ConfigError("coverage_threshold must lie in (0, 1]");
}

std::string_view to_string(FallbackReason r) {
  return r == FallbackReason::NoFaultFound ? "no-fault-found" : "generation-failed";
}

PhaseKind phase_kind(const RecoveryPhase& p) { return static_cast<PhaseKind>(p.index()); }

std::string_view to_string(PhaseKind k) {
  switch (k) {
    case PhaseKind::Normal: return "Normal";
    case PhaseKind::DynamicAdaptation: return "DynamicAdaptation";
    case PhaseKind::SelfTesting: return "SelfTesting";
    case PhaseKind::AwaitingVariant: return "AwaitingVariant";
    case PhaseKind::Fallback: return "Fallback";
  }
  return "?";
}

std::optional<CoreIndex> phase_core(const RecoveryPhase& p) {
  return std::visit(overloaded{
                        [](const phase::Normal&) -> std::optional<CoreIndex> {
                          return std::nullopt;
                        },
                        [](const auto& q) -> std::optional<CoreIndex> { return q.core; },
                    },
                    p);
}

bool is_allowed_edge(PhaseKind from, PhaseKind to) {
  using K = PhaseKind;
  if (from == to) return true;
  switch (from) {
    case K::Normal: return to == K::DynamicAdaptation;
    case K::DynamicAdaptation: return to == K::Normal || to == K::SelfTesting;
    case K::SelfTesting: return to == K::AwaitingVariant || to == K::Fallback;
    case K::AwaitingVariant: return to == K::Normal || to == K::Fallback;
    case K::Fallback: return false;
  }
  return false;
}

std::string describe(const Action& a) {
  return std::visit(
      overloaded{
          [](const action::ReconfigureDynamic& r) {
            return "reconfigure core " + std::to_string(r.core) + " attempt " +
                   std::to_string(r.attempt) +
                   (r.config ? " " + describe(*r.config) : std::string());
          },
          [](const action::RunSelfTests& r) {
            return "self-test core " + std::to_string(r.core);
          },
          [](const action::RequestVariant& r) {
            return "request variant core " + std::to_string(r.core) + " for " +
                   std::string(kind_name(r.fault.kind)) + " " +
                   location_string(r.fault.kind);
          },
          [](const action::DeployVariant& r) {
            return "deploy core " + std::to_string(r.core) + " " + describe(r.config);
          },
          [](const action::EpisodeClosed& r) {
            return "recovered core " + std::to_string(r.core);
          },
          [](const action::RaiseAlarm& r) {
            return "alarm" + (r.core ? " core " + std::to_string(*r.core) : std::string()) +
                   ": " + r.reason;
          },
      },
      a);
}

Transition on_vote_result(const RecoveryPhase& phase, const HealthMap& health,
                          const VoteResult& vote, const Thresholds& t) {
  Transition out{phase, health, {}};
  const auto* c = std::get_if<Consensus>(&vote);
  if (!c) {
    out.actions.push_back(action::RaiseAlarm{std::nullopt, "no majority"});
    return out;
  }
  for (auto& [core, h] : out.health) {
    if (contains(c->dissenters, core)) {
      ++h.error_counter;
      h.consecutive_ok = 0;
    } else {
      h.error_counter = 0;
      ++h.consecutive_ok;
    }
  }
  for (auto core : c->dissenters)
    if (!out.health.count(core)) out.health[core] = CoreHealth{1, 0};

  if (std::holds_alternative<phase::Normal>(phase)) {
    for (const auto& [core, h] : out.health) {
      if (h.error_counter > t.threshold_dynamic) {
        out.phase = phase::DynamicAdaptation{core, 1};
        out.actions.push_back(action::ReconfigureDynamic{core, 1, std::nullopt});
        break;
      }
    }
  } else if (const auto* d = std::get_if<phase::DynamicAdaptation>(&phase)) {
    const auto& h = out.health[d->core];
    if (contains(c->dissenters, d->core)) {
      if (d->attempt < t.max_dynamic_attempts) {
        out.phase = phase::DynamicAdaptation{d->core, d->attempt + 1};
        out.actions.push_back(
            action::ReconfigureDynamic{d->core, d->attempt + 1, std::nullopt});
      } else {
        out.phase = phase::SelfTesting{d->core};
        out.actions.push_back(action::RunSelfTests{d->core});
      }
    } else if (h.consecutive_ok >= t.threshold_dynamic) {
      out.phase = phase::Normal{};
      out.actions.push_back(action::EpisodeClosed{d->core});
    }
  }
  return out;
}

Transition on_selftest_report(const RecoveryPhase& phase, const HealthMap& health,
                              std::vector<FaultDefinition> report) {
  Transition out{phase, health, {}};
  const auto* s = std::get_if<phase::SelfTesting>(&phase);
  if (!s) return out;
  if (report.empty()) {
    out.phase = phase::Fallback{s->core, FallbackReason::NoFaultFound};
    out.actions.push_back(action::RaiseAlarm{s->core, "no fault found"});
    return out;
  }
  std::sort(report.begin(), report.end(),
            [](const auto& a, const auto& b) { return kind_less(a.kind, b.kind); });
  out.phase = phase::AwaitingVariant{s->core, report.front()};
  out.actions.push_back(action::RequestVariant{s->core, report.front()});
  return out;
}

Transition on_variant(const RecoveryPhase& phase, const HealthMap& health,
                      const std::optional<DiversityConfig>& variant) {
  Transition out{phase, health, {}};
  const auto* a = std::get_if<phase::AwaitingVariant>(&phase);
  if (!a) return out;
  if (!variant) {
    out.phase = phase::Fallback{a->core, FallbackReason::GenerationFailed};
    out.actions.push_back(action::RaiseAlarm{a->core, "variant generation failed"});
    return out;
  }
  out.health[a->core] = CoreHealth{};
  out.phase = phase::Normal{};
  out.actions.push_back(action::DeployVariant{a->core, *variant});
  return out;
}

DiversityConfig next_dynamic_config(const Program& program, CoreIndex core,
                                    const AdaptationHistory& history, Seed seed,
                                    const Thresholds& thresholds) {
  static const std::vector<AdaptationEntry> kEmpty;
  const auto it = history.entries.find(core);
  const auto& tried = it == history.entries.end() ? kEmpty : it->second;
  const auto attempt = static_cast<std::uint32_t>(std::max<std::size_t>(tried.size(), 1));
  if (attempt > thresholds.max_dynamic_attempts)
    throw ScheduleExhausted("dynamic schedule exhausted after " +
                            std::to_string(thresholds.max_dynamic_attempts) + " attempts");
  const DiversityConfig prev = tried.empty() ? DiversityConfig{} : tried.back().config;
  auto seen = [&](const DiversityConfig& c) {
    return std::any_of(tried.begin(), tried.end(),
                       [&](const auto& e) { return e.config == c; });
  };
  const bool has_family = effective_family(program, prev).has_value();

  Knob knob = kSchedule[(attempt - 1) % kSchedule.size()];
  if (knob == Knob::Key && !has_family) knob = Knob::Base;
  if (knob == Knob::Gap) {
    DiversityConfig c = prev;
    c.dynamic.gap_size = prev.dynamic.gap_size == 0 ? 1 : prev.dynamic.gap_size * 2;
    if (layout_fits(program, c.dynamic) && !seen(c)) return c;
    knob = Knob::Base;
  }
  for (std::uint64_t tries = 0; tries < 1024; ++tries) {
    Rng rng = make_rng(derive_seed(seed, {core, attempt, static_cast<std::uint64_t>(knob), tries}));
    DiversityConfig c = prev;
    switch (knob) {
      case Knob::Base:
        c.dynamic.base_offset = static_cast<std::uint32_t>(1 + uniform_below(rng, kMaxBaseOffset - 1));
        break;
      case Knob::Order:
        c.dynamic.variable_order_seed = rng();
        break;
      case Knob::Key:
        c.dynamic.reexpr_key = static_cast<Word>(1 + uniform_below(rng, 0xFFFFFFFEu));
        break;
      case Knob::Gap:
        break;
    }
    if (!seen(c) && c != prev && layout_fits(program, c.dynamic)) return c;
  }
  throw ScheduleExhausted("no untried dynamic configuration found");
}

Controller::Controller(const Program& program, std::size_t cores, Thresholds thresholds,
                       Seed seed, std::unique_ptr<AdaptationStrategy> strategy)
    : program_(&program),
      thresholds_(thresholds),
      seed_(seed),
      strategy_(strategy ? std::move(strategy) : std::make_unique<ScheduleStrategy>()),
      phase_(phase::Normal{}) {
  thresholds_.validate();
  for (std::size_t c = 0; c < cores; ++c) {
    health_[static_cast<CoreIndex>(c)] = CoreHealth{};
    configs_[static_cast<CoreIndex>(c)] = DiversityConfig{};
  }
}

std::vector<Action> Controller::on_vote(const VoteResult& vote, std::uint64_t round) {
  auto t = on_vote_result(phase_, health_, vote, thresholds_);
  if (const auto* d = std::get_if<phase::DynamicAdaptation>(&phase_)) {
    auto& entries = history_.entries[d->core];
    if (!entries.empty())
      entries.back().error_counters.push_back(t.health[d->core].error_counter);
  }
  return apply(std::move(t), "vote", round);
}

std::vector<Action> Controller::on_selftest_report(std::vector<FaultDefinition> report,
                                                   std::uint64_t round) {
  return apply(adaptdiv::on_selftest_report(phase_, health_, std::move(report)),
               "selftest", round);
}

std::vector<Action> Controller::on_variant(const std::optional<DiversityConfig>& variant,
                                           std::uint64_t round) {
  return apply(adaptdiv::on_variant(phase_, health_, variant), "variant", round);
}

std::vector<Action> Controller::apply(Transition t, const std::string& trigger,
                                      std::uint64_t round) {
  const auto from = phase_kind(phase_);
  for (auto& a : t.actions) {
    if (auto* r = std::get_if<action::ReconfigureDynamic>(&a)) {
      if (r->attempt == 1) {
        ++episode_;
        history_.entries[r->core] = {AdaptationEntry{configs_[r->core], {}}};
      }
      try {
        auto cfg = strategy_->next(*program_, r->core, history_,
                                   derive_seed(seed_, {episode_}), thresholds_);
        history_.entries[r->core].push_back(AdaptationEntry{cfg, {}});
        configs_[r->core] = cfg;
        r->config = std::move(cfg);
      } catch (const ScheduleExhausted&) {
        t.phase = phase::SelfTesting{r->core};
        a = action::RunSelfTests{r->core};
      }
    } else if (const auto* d = std::get_if<action::DeployVariant>(&a)) {
      configs_[d->core] = d->config;
    }
  }
  phase_ = t.phase;
  health_ = std::move(t.health);
  events_.push_back(ControllerEvent{round, trigger, from, phase_kind(phase_), phase_,
                                    health_, t.actions});
  return std::move(t.actions);
}

}  // namespace adaptdiv
