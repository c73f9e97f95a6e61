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

#include "adaptdiv/harness.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <filesystem>
#include <sstream>

#include "adaptdiv/benchmarks.hpp"
#include "adaptdiv/selftest.hpp"
#include "adaptdiv/server.hpp"

namespace adaptdiv {

namespace {

std::size_t idx(FinalStatus s) { return static_cast<std::size_t>(s); }

constexpr std::array<FinalStatus, kFinalStatusCount> kStatuses{
    FinalStatus::MaskedThroughout, FinalStatus::RecoveredDynamic, FinalStatus::RecoveredStatic,
    FinalStatus::FallbackAlarm, FinalStatus::Undetected};

bool is_permanent(const Fault& f) { return std::holds_alternative<Permanent>(f.persistence); }

class Trial {
 public:
  Trial(const CampaignSpec& spec, std::size_t index)
      : spec_(spec),
        bench_(find_benchmark(spec.benchmark)),
        seed_(derive_seed(spec.seed, {index})),
        slots_(default_slots(bench_.program, spec.nmr)),
        controller_(bench_.program, spec.nmr.n, spec.thresholds, derive_seed(seed_, {5})) {
    rec_.trial = index;
    Rng rng = make_rng(derive_seed(seed_, {1}));
    rec_.fault = sample_faults(derive_seed(seed_, {2}), spec.fault_space, 1).front();
    rec_.fault.core = static_cast<CoreIndex>(uniform_below(rng, spec.nmr.n));
    rec_.onset_round = spec.mode == CampaignMode::SingleShotVoting
                           ? 0
                           : uniform_below(rng, spec.onset_window);
    visit(PhaseKind::Normal);
  }

  TrialRecord run() {
    Rng inputs = make_rng(derive_seed(seed_, {3}));
    for (std::uint64_t r = 0; r < spec_.max_rounds; ++r) {
      const auto input = bench_.generate(inputs);
      const auto golden = golden_run(bench_.program, input);
      std::map<CoreIndex, FaultPlan> plans;
      if (active(r)) plans[rec_.fault.core] = FaultPlan({rec_.fault});
      const auto v = vote(execute_replicas(input, slots_, plans), spec_.nmr.m);
      record_vote(r, v, golden);

      if (spec_.mode == CampaignMode::SingleShotVoting) {
        const auto& last = rec_.votes.back();
        rec_.status = !last.consensus || !last.correct ? FinalStatus::FallbackAlarm
                      : has_mismatch(v)               ? FinalStatus::MaskedThroughout
                                                      : FinalStatus::Undetected;
        return rec_;
      }

      closed_ = false;
      handle(controller_.on_vote(v, r), r);
      if (auto s = finished(r, v)) {
        rec_.status = *s;
        return rec_;
      }
    }
    rec_.status = episode_started_ ? FinalStatus::FallbackAlarm : quiet_status();
    return rec_;
  }

 private:
  bool active(std::uint64_t r) const {
    return is_permanent(rec_.fault) ? r >= rec_.onset_round : r == rec_.onset_round;
  }

  void visit(PhaseKind k) {
    if (std::find(rec_.phases_visited.begin(), rec_.phases_visited.end(), k) ==
        rec_.phases_visited.end())
      rec_.phases_visited.push_back(k);
  }

  void record_vote(std::uint64_t r, const VoteResult& v, const std::vector<Word>& golden) {
    RoundVote rv{r, true, true, {}};
    if (const auto* c = std::get_if<Consensus>(&v)) {
      rv.correct = c->value == golden;
      rv.dissenters = c->dissenters;
    } else {
      rv.consensus = false;
      rv.correct = false;
      for (const auto& [core, _] : std::get<NoMajority>(v).values) rv.dissenters.push_back(core);
    }
    if (has_mismatch(v)) {
      mismatch_ = true;
      if (!rec_.rounds_to_detect && r >= rec_.onset_round)
        rec_.rounds_to_detect = r - rec_.onset_round;
    }
    rec_.votes.push_back(std::move(rv));
  }

  void handle(std::vector<Action> first, std::uint64_t r) {
    std::deque<Action> queue(first.begin(), first.end());
    visit(phase_kind(controller_.phase()));
    auto push = [&](std::vector<Action> more) {
      visit(phase_kind(controller_.phase()));
      queue.insert(queue.end(), more.begin(), more.end());
    };
    while (!queue.empty()) {
      const Action a = queue.front();
      queue.pop_front();
      if (const auto* d = std::get_if<action::ReconfigureDynamic>(&a)) {
        episode_started_ = true;
        ++rec_.dynamic_attempts;
        slots_[d->core] = ReplicaSlot::make(d->core, bench_.program, *d->config);
      } else if (const auto* s = std::get_if<action::RunSelfTests>(&a)) {
        CoreContext ctx;
        if (s->core == rec_.fault.core && active(r)) ctx.plan = FaultPlan({rec_.fault});
        ctx.encoding_seed = slots_[s->core].config.static_.opcode_encoding_seed;
        push(controller_.on_selftest_report(run_self_tests(ctx).found, r));
      } else if (const auto* q = std::get_if<action::RequestVariant>(&a)) {
        rec_.reported_fault = q->fault;
        push(controller_.on_variant(request(q->fault), r));
      } else if (const auto* dv = std::get_if<action::DeployVariant>(&a)) {
        rec_.variant = dv->config;
        static_deployed_ = true;
        clean_streak_ = 0;
        slots_[dv->core] = ReplicaSlot::make(dv->core, bench_.program, dv->config);
      } else if (std::holds_alternative<action::EpisodeClosed>(a)) {
        closed_ = true;
      }
    }
  }

  std::optional<DiversityConfig> request(const FaultDefinition& fault) {
    VariantRequest req;
    req.program = bench_.program;
    req.fault = fault;
    req.coverage_threshold = spec_.thresholds.coverage_threshold;
    req.test_inputs = default_test_set(bench_, spec_.seed, spec_.test_random_count);
    req.search_budget = spec_.variant_budget;
    req.seed = derive_seed(seed_, {4});
    const auto resp = generate_variant(req);
    if (const auto* g = std::get_if<Generated>(&resp)) return g->config;
    return std::nullopt;
  }

  bool counters_clear() const {
    return std::all_of(controller_.health().begin(), controller_.health().end(),
                       [](const auto& e) { return e.second.error_counter == 0; });
  }

  FinalStatus quiet_status() const {
    return mismatch_ ? FinalStatus::MaskedThroughout : FinalStatus::Undetected;
  }

  std::optional<FinalStatus> finished(std::uint64_t r, const VoteResult& v) {
    const auto kind = phase_kind(controller_.phase());
    if (kind == PhaseKind::Fallback) return FinalStatus::FallbackAlarm;
    if (static_deployed_) {
      const auto* c = std::get_if<Consensus>(&v);
      const bool clean = kind == PhaseKind::Normal && c &&
                         std::find(c->dissenters.begin(), c->dissenters.end(),
                                   rec_.fault.core) == c->dissenters.end();
      clean_streak_ = clean ? clean_streak_ + 1 : 0;
      if (clean_streak_ >= spec_.thresholds.threshold_dynamic) return FinalStatus::RecoveredStatic;
      return std::nullopt;
    }
    if (closed_) return FinalStatus::RecoveredDynamic;
    if (!episode_started_ && kind == PhaseKind::Normal && counters_clear() &&
        r >= rec_.onset_round + spec_.observe_rounds)
      return quiet_status();
    return std::nullopt;
  }

  const CampaignSpec& spec_;
  const Benchmark& bench_;
  Seed seed_;
  std::vector<ReplicaSlot> slots_;
  Controller controller_;
  TrialRecord rec_;
  bool mismatch_ = false;
  bool episode_started_ = false;
  bool static_deployed_ = false;
  bool closed_ = false;
  std::uint32_t clean_streak_ = 0;
};

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

CampaignMode parse_mode(const std::string& s) {
  if (s == to_string(CampaignMode::SingleShotVoting)) return CampaignMode::SingleShotVoting;
  if (s == to_string(CampaignMode::ClosedLoopRecovery)) return CampaignMode::ClosedLoopRecovery;
  throw ConfigError("unknown campaign mode '" + s + "'");
}

Json counts_json(const std::array<std::size_t, kFinalStatusCount>& counts, std::size_t total) {
  Json c, f;
  for (auto s : kStatuses) {
    c[std::string(to_string(s))] = counts[idx(s)];
    f[std::string(to_string(s))] =
        total ? static_cast<double>(counts[idx(s)]) / static_cast<double>(total) : 0.0;
  }
  return Json{{"counts", c}, {"fractions", f}};
}

CampaignResult collect(const CampaignSpec& spec, bool parallel) {
  spec.validate();
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<TrialRecord> records(spec.trials);
  const auto n = static_cast<std::int64_t>(spec.trials);
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::int64_t i = 0; i < n; ++i)
    records[static_cast<std::size_t>(i)] = run_trial(spec, static_cast<std::size_t>(i));
  CampaignResult out{summarize(records), std::move(records)};
  out.summary.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace

std::string_view to_string(CampaignMode m) {
  return m == CampaignMode::SingleShotVoting ? "single_shot_voting" : "closed_loop_recovery";
}

std::string_view to_string(FinalStatus s) {
  switch (s) {
    case FinalStatus::MaskedThroughout: return "masked_throughout";
    case FinalStatus::RecoveredDynamic: return "recovered_dynamic";
    case FinalStatus::RecoveredStatic: return "recovered_static";
    case FinalStatus::FallbackAlarm: return "fallback_alarm";
    case FinalStatus::Undetected: return "undetected";
  }
  return "?";
}

void CampaignSpec::validate() const {
  find_benchmark(benchmark);
  nmr.validate();
  thresholds.validate();
  if (trials < 1) throw ConfigError("trials must be at least 1");
  if (onset_window < 1) throw ConfigError("onset_window must be at least 1");
  if (max_rounds < onset_window) throw ConfigError("max_rounds must cover the onset window");
  if (variant_budget < 1) throw ConfigError("variant_budget must be positive");
  if (space_size(fault_space) == 0) throw EmptySpace("fault space is empty");
}

double CampaignSummary::fraction(FinalStatus s) const {
  return trials ? static_cast<double>(counts[idx(s)]) / static_cast<double>(trials) : 0.0;
}

double CampaignSummary::dynamic_recovery_rate() const {
  return detected ? static_cast<double>(recovered_dynamic_detected) / static_cast<double>(detected)
                  : 0.0;
}

TrialRecord run_trial(const CampaignSpec& spec, std::size_t index) {
  return Trial(spec, index).run();
}

CampaignResult run_campaign(const CampaignSpec& spec) { return collect(spec, true); }
CampaignResult run_campaign_serial(const CampaignSpec& spec) { return collect(spec, false); }

CampaignSummary summarize(const std::vector<TrialRecord>& records) {
  CampaignSummary s;
  s.trials = records.size();
  for (const auto& r : records) {
    ++s.counts[idx(r.status)];
    auto& c = s.per_class[fault_class(r.fault.kind)];
    ++c.trials;
    ++c.counts[idx(r.status)];
    if (r.rounds_to_detect) {
      ++s.detected;
      if (r.status == FinalStatus::RecoveredDynamic) ++s.recovered_dynamic_detected;
    }
  }
  return s;
}

std::string records_csv(const std::vector<TrialRecord>& records) {
  std::ostringstream out;
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.trial << ',' << kind_name(r.fault.kind) << ','
        << csv_field(location_string(r.fault.kind) + "@core" + std::to_string(r.fault.core))
        << ',' << r.onset_round << ','
        << (r.rounds_to_detect ? std::to_string(*r.rounds_to_detect) : std::string()) << ','
        << r.dynamic_attempts << ',' << to_string(r.status) << ','
        << (r.variant ? csv_field(describe(*r.variant)) : std::string()) << '\n';
  }
  return out.str();
}

Json summary_json(const CampaignSummary& s) {
  Json j;
  j["trials"] = s.trials;
  const auto all = counts_json(s.counts, s.trials);
  j["counts"] = all["counts"];
  j["fractions"] = all["fractions"];
  Json per = Json::object();
  for (const auto& [cls, b] : s.per_class) {
    Json e = counts_json(b.counts, b.trials);
    e["trials"] = b.trials;
    per[std::string(to_string(cls))] = e;
  }
  j["per_class"] = per;
  j["detected"] = s.detected;
  j["recovered_dynamic_detected"] = s.recovered_dynamic_detected;
  j["dynamic_recovery_rate"] = s.dynamic_recovery_rate();
  j["runtime_seconds"] = s.runtime_seconds;
  return j;
}

Json to_json(const TrialRecord& r) {
  Json j;
  j["trial"] = r.trial;
  j["fault"] = to_json(r.fault);
  j["onset_round"] = r.onset_round;
  j["rounds_to_detect"] = r.rounds_to_detect ? Json(*r.rounds_to_detect) : Json(nullptr);
  j["dynamic_attempts"] = r.dynamic_attempts;
  Json phases = Json::array();
  for (auto p : r.phases_visited) phases.push_back(std::string(to_string(p)));
  j["phases_visited"] = phases;
  j["variant_config"] = r.variant ? to_json(*r.variant) : Json(nullptr);
  j["reported_fault"] = r.reported_fault ? to_json(*r.reported_fault) : Json(nullptr);
  Json votes = Json::array();
  for (const auto& v : r.votes)
    votes.push_back({{"round", v.round},
                     {"consensus", v.consensus},
                     {"correct", v.correct},
                     {"dissenters", v.dissenters}});
  j["votes"] = votes;
  j["final_status"] = std::string(to_string(r.status));
  return j;
}

std::vector<std::string> emit_report(const CampaignSummary& summary,
                                     const std::vector<TrialRecord>& records,
                                     ReportFormat format, const std::string& prefix) {
  std::vector<std::string> paths;
  const auto parent = std::filesystem::path(prefix).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
    if (ec) throw IoError("cannot create " + parent.string() + ": " + ec.message());
  }
  if (format == ReportFormat::Csv) {
    paths.push_back(prefix + ".csv");
    write_text_file(paths.back(), records_csv(records));
  } else {
    Json all = Json::array();
    for (const auto& r : records) all.push_back(to_json(r));
    paths.push_back(prefix + ".json");
    write_text_file(paths.back(), all.dump(2) + "\n");
  }
  paths.push_back(prefix + "_summary.json");
  write_text_file(paths.back(), summary_json(summary).dump(2) + "\n");
  return paths;
}

Json to_json(const CampaignSpec& s) {
  Json j;
  j["benchmark"] = s.benchmark;
  j["nmr"] = {{"n", s.nmr.n}, {"m", s.nmr.m}};
  j["fault_space"] = to_json(s.fault_space);
  j["trials"] = s.trials;
  j["seed"] = s.seed;
  j["thresholds"] = {{"threshold_dynamic", s.thresholds.threshold_dynamic},
                     {"max_dynamic_attempts", s.thresholds.max_dynamic_attempts},
                     {"coverage_threshold", s.thresholds.coverage_threshold}};
  j["mode"] = std::string(to_string(s.mode));
  j["onset_window"] = s.onset_window;
  j["observe_rounds"] = s.observe_rounds;
  j["max_rounds"] = s.max_rounds;
  j["variant_budget"] = s.variant_budget;
  j["test_random_count"] = s.test_random_count;
  return j;
}

CampaignSpec campaign_spec_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("campaign spec must be a record");
  CampaignSpec s;
  try {
    s.benchmark = j.at("benchmark").get<std::string>();
    if (j.contains("nmr")) {
      s.nmr.n = j.at("nmr").value("n", s.nmr.n);
      s.nmr.m = j.at("nmr").value("m", NmrConfig::majority(s.nmr.n).m);
    }
    if (!j.contains("fault_space")) throw ConfigError("missing field 'fault_space'");
    s.fault_space = fault_space_from_json(j.at("fault_space"));
    s.trials = j.value("trials", s.trials);
    s.seed = j.value("seed", s.seed);
    if (j.contains("thresholds")) {
      const auto& t = j.at("thresholds");
      s.thresholds.threshold_dynamic = t.value("threshold_dynamic", s.thresholds.threshold_dynamic);
      s.thresholds.max_dynamic_attempts =
          t.value("max_dynamic_attempts", s.thresholds.max_dynamic_attempts);
      s.thresholds.coverage_threshold =
          t.value("coverage_threshold", s.thresholds.coverage_threshold);
    }
    if (j.contains("mode")) s.mode = parse_mode(j.at("mode").get<std::string>());
    s.onset_window = j.value("onset_window", s.onset_window);
    s.observe_rounds = j.value("observe_rounds", s.observe_rounds);
    s.max_rounds = j.value("max_rounds", s.max_rounds);
    s.variant_budget = j.value("variant_budget", s.variant_budget);
    s.test_random_count = j.value("test_random_count", s.test_random_count);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad campaign spec: ") + e.what());
  }
  s.validate();
  return s;
}

}  // namespace adaptdiv
