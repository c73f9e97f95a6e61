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

#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>

#include "adaptdiv/benchmarks.hpp"
#include "adaptdiv/harness.hpp"
#include "adaptdiv/selftest.hpp"
#include "adaptdiv/server.hpp"

using namespace adaptdiv;

namespace {

// Pinned tolerances.
constexpr double kC1MinDynamicRecovery = 0.80;
constexpr std::size_t kC1MinDetected = 500;
constexpr std::size_t kC2MinFaults = 1000;
constexpr std::size_t kC3Configs = 200;
constexpr std::size_t kC3Inputs = 16;
constexpr std::size_t kC4MemorySamples = 1000;
constexpr std::size_t kC4FaultFreeRuns = 1000;
constexpr double kC5MinCoverage = 0.95;
constexpr double kC5MinGenerated = 0.90;
constexpr std::size_t kC5PerBenchmark = 20;
constexpr std::size_t kC6TransientTrials = 500;

struct Verdict {
  bool pass = false;
  std::string detail;
};

void note(const std::string& s) { std::printf("    %s\n", s.c_str()); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1. Bitcount address-decoder faults bypassed by dynamic adaptation.
Verdict c1() {
  CampaignSpec s;
  s.benchmark = "bitcount";
  s.fault_space.classes = {FaultClass::AddressDecoder};
  s.fault_space.port = DecoderPort::Data;
  s.seed = 94;
  std::vector<TrialRecord> records;
  while (true) {
    s.trials = records.size() + 1000;
    // Trials are seed-indexed, so extending the campaign keeps earlier records.
    const auto res = run_campaign(s);
    records = res.records;
    if (res.summary.detected >= kC1MinDetected) break;
  }
  const auto sum = summarize(records);
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_mode;
  for (const auto& r : records) {
    if (!r.rounds_to_detect) continue;
    auto& m = per_mode[std::string(to_string(std::get<AddressDecoderLine>(r.fault.kind).mode))];
    ++m.second;
    m.first += r.status == FinalStatus::RecoveredDynamic;
  }
  for (const auto& [mode, c] : per_mode)
    note(fmt("mode %-6s recovered dynamically %zu/%zu", mode.c_str(), c.first, c.second));
  note(fmt("statuses among all %zu trials: undetected %zu, masked %zu, dynamic %zu, static %zu, "
           "fallback %zu",
           sum.trials, sum.counts[4], sum.counts[0], sum.counts[1], sum.counts[2], sum.counts[3]));
  const double rate = sum.dynamic_recovery_rate();
  return {rate >= kC1MinDynamicRecovery && sum.detected >= kC1MinDetected,
          fmt("bitcount address-decoder dynamic recovery %.4f (>= %.2f) over %zu detected of %zu "
              "trials",
              rate, kC1MinDynamicRecovery, sum.detected, sum.trials)};
}

// 2. TMR masking and dissenter identification.
Verdict c2() {
  std::size_t faults = 0, rounds = 0, mismatches = 0, wrong_consensus = 0, missed_core = 0,
              no_majority = 0;
  for (const auto& b : benchmarks()) {
    FaultSpace space;
    space.classes = {FaultClass::Register, FaultClass::MemoryCell, FaultClass::AddressDecoder,
                     FaultClass::InstructionDecoder};
    space.mem_lo = 0;
    space.mem_hi = 0x1100;
    space.port = DecoderPort::Both;
    const std::size_t n = kC2MinFaults / benchmarks().size() + 40;
    const auto sampled = sample_faults(derive_seed(2, {faults}), space, n);
    std::vector<ReplicaSlot> slots;
    for (CoreIndex c = 0; c < 3; ++c)
      slots.push_back(ReplicaSlot::make(c, b.program, random_config(derive_seed(20, {c}), b.program)));
    Rng rng = make_rng(derive_seed(21, {faults}));
    for (auto f : sampled) {
      f.core = static_cast<CoreIndex>(uniform_below(rng, 3));
      ++faults;
      for (int k = 0; k < 4; ++k) {
        const auto in = b.generate(rng);
        const auto golden = golden_run(b.program, in);
        const auto v = vote(execute_replicas(in, slots, {{f.core, FaultPlan({f})}}), 2);
        ++rounds;
        if (const auto* c = std::get_if<Consensus>(&v)) {
          wrong_consensus += c->value != golden;
          if (!c->dissenters.empty()) {
            ++mismatches;
            missed_core += std::find(c->dissenters.begin(), c->dissenters.end(), f.core) ==
                           c->dissenters.end();
          }
        } else {
          ++no_majority;
        }
      }
    }
  }
  note(fmt("%zu rounds, %zu with a mismatch, %zu without majority", rounds, mismatches,
           no_majority));
  return {faults >= kC2MinFaults && wrong_consensus == 0 && missed_core == 0 && no_majority == 0,
          fmt("%zu single-core faults: %zu wrong consensus values, %zu mismatches missing the "
              "faulty core",
              faults, wrong_consensus, missed_core)};
}

// 3. Fault-free transparency of random configurations.
Verdict c3() {
  std::size_t runs = 0, violations = 0;
  for (const auto& b : benchmarks()) {
    auto inputs = default_test_set(b, 3, kC3Inputs);
    inputs.resize(kC3Inputs);
    for (std::size_t i = 0; i < kC3Configs; ++i) {
      const auto c = random_config(derive_seed(3, {i}), b.program);
      const auto image = assemble(b.program, c);
      for (const auto& in : inputs) {
        ++runs;
        const auto out = run_canonical(image, c, in);
        violations += !out || *out != golden_run(b.program, in);
      }
    }
  }
  return {violations == 0, fmt("%zu fault-free diversified runs, %zu violations", runs, violations)};
}

bool located(const FaultReport& r, const FaultKind& k) {
  if (r.found.empty()) return false;
  return std::all_of(r.found.begin(), r.found.end(),
                     [&](const auto& f) { return same_location(f.kind, k); });
}

// 4. Self-test completeness and soundness.
Verdict c4() {
  struct Tally {
    std::size_t injected = 0, located = 0, exact = 0;
  };
  std::map<std::string, Tally> t;
  auto check = [&](const char* cls, const FaultKind& k, auto exact_fn) {
    CoreContext core;
    core.plan = FaultPlan({Fault{k, Permanent{0}, 0}});
    const auto r = run_self_tests(core);
    auto& e = t[cls];
    ++e.injected;
    if (located(r, k)) {
      ++e.located;
      e.exact += exact_fn(r.found.front().kind);
    }
  };
  for (RegIndex reg = 0; reg < kRegisterCount; ++reg)
    for (std::uint8_t bit = 0; bit < kWordBits; ++bit)
      for (std::uint8_t v = 0; v < 2; ++v) {
        const FaultKind k = RegisterStuckBit{reg, bit, v, AccessSide::Read};
        check("register", k, [&](const FaultKind& f) {
          return std::get<RegisterStuckBit>(f).stuck_value == v;
        });
      }
  for (std::uint8_t line = 0; line < 16; ++line)
    for (auto mode : {LineMode::Stuck0, LineMode::Stuck1, LineMode::Flip}) {
      const FaultKind k = AddressDecoderLine{line, mode, DecoderPort::Data};
      check("address line", k, [&](const FaultKind& f) {
        return std::get<AddressDecoderLine>(f).mode == mode;
      });
    }
  const auto enc = OpcodeEncoding::identity();
  for (auto from : enc.physical)
    for (unsigned to = 0; to < 256; ++to) {
      if (to == from) continue;
      const FaultKind k = InstructionDecoderSub{from, static_cast<OpcodeByte>(to)};
      const bool assigned = enc.decode[to].has_value();
      check("opcode pair", k, [&](const FaultKind& f) {
        const auto& s = std::get<InstructionDecoderSub>(f);
        return assigned ? s.to == static_cast<OpcodeByte>(to) : !s.to.has_value();
      });
    }
  FaultSpace mem;
  mem.classes = {FaultClass::MemoryCell};
  mem.mem_lo = MarchRegion{}.lo;
  mem.mem_hi = MarchRegion{}.hi;
  for (const auto& f : sample_faults(4, mem, kC4MemorySamples)) {
    const auto m = std::get<MemoryStuckBit>(f.kind);
    check("memory bit", f.kind, [&](const FaultKind& g) {
      return std::get<MemoryStuckBit>(g).stuck_value == m.stuck_value;
    });
  }
  std::size_t false_alarms = 0;
  for (std::size_t i = 0; i < kC4FaultFreeRuns; ++i) {
    CoreContext core;
    if (i % 2) core.encoding_seed = derive_seed(4, {i});
    false_alarms += !run_self_tests(core).found.empty();
  }
  bool pass = false_alarms == 0;
  std::string detail;
  for (const auto& [cls, e] : t) {
    note(fmt("%-12s injected %5zu located %5zu exact value/mode/target %5zu", cls.c_str(),
             e.injected, e.located, e.exact));
    pass = pass && e.located == e.injected;
    detail += fmt("%s %zu/%zu, ", cls.c_str(), e.located, e.injected);
  }
  return {pass, detail + fmt("fault-free false alarms %zu/%zu", false_alarms, kC4FaultFreeRuns)};
}

// 5. Countermeasure matrix through the variant server.
Verdict c5() {
  const std::vector<std::pair<FaultClass, const char*>> classes{
      {FaultClass::Register, "register"},
      {FaultClass::MemoryCell, "memory"},
      {FaultClass::AddressDecoder, "address decoder"},
      {FaultClass::InstructionDecoder, "instruction decoder"}};
  bool pass = true;
  std::string detail;
  std::size_t exclusion_below_one = 0;
  for (const auto& [cls, name] : classes) {
    std::size_t sampled = 0, generated = 0, effective = 0, effective_generated = 0;
    std::map<std::string, std::size_t> techniques;
    std::map<std::string, std::size_t> failures;
    for (const auto& b : benchmarks()) {
      const auto tests = default_test_set(b, 0);
      const auto image = assemble(b.program);
      FaultSpace space;
      space.classes = {cls};
      std::vector<Fault> faults;
      if (cls == FaultClass::MemoryCell) {
        // Half in the code words, half in the data words.
        space.mem_lo = image.layout.code_base;
        space.mem_hi = static_cast<Address>(image.layout.code_base + image.resolved_code.size());
        faults = sample_faults(derive_seed(5, {9, b.name.size()}), space, kC5PerBenchmark / 2);
        space.mem_lo = image.layout.data_base;
        space.mem_hi = image.layout.data_end;
        const auto more = sample_faults(derive_seed(5, {10, b.name.size()}), space,
                                        kC5PerBenchmark - faults.size());
        faults.insert(faults.end(), more.begin(), more.end());
      } else {
        faults = sample_faults(derive_seed(5, {static_cast<std::uint64_t>(cls)}), space,
                               kC5PerBenchmark);
      }
      for (const auto& f : faults) {
        ++sampled;
        VariantRequest req{b.program, {f.kind, "sampled"}, kC5MinCoverage, tests, 64, 5};
        const auto resp = generate_variant(req);
        const auto* g = std::get_if<Generated>(&resp);
        const bool ok = g && g->coverage >= kC5MinCoverage;
        generated += ok;
        if (ok)
          ++techniques[std::string(to_string(g->technique))];
        else
          ++failures[b.name + " " + location_string(f.kind)];
        if (estimate_masking_coverage(b.program, {}, f.kind, tests) < kC5MinCoverage) {
          ++effective;
          effective_generated += ok;
        }
        if (const auto* r = std::get_if<RegisterStuckBit>(&f.kind)) {
          DiversityConfig ex;
          ex.static_.excluded_registers = {r->reg};
          exclusion_below_one += estimate_masking_coverage(b.program, ex, f.kind, tests) != 1.0;
        }
      }
    }
    const double rate = static_cast<double>(generated) / static_cast<double>(sampled);
    std::string tech;
    for (const auto& [k, v] : techniques) tech += fmt(" %s=%zu", k.c_str(), v);
    note(fmt("%-19s generated %zu/%zu (%.3f); faults the identity layout does not mask: %zu/%zu;"
             " winning techniques:%s",
             name, generated, sampled, rate, effective_generated, effective, tech.c_str()));
    for (const auto& [k, v] : failures) note(fmt("  not generated: %s x%zu", k.c_str(), v));
    pass = pass && rate >= kC5MinGenerated;
    detail += fmt("%s %.3f, ", name, rate);
  }
  note(fmt("register exclusion below full coverage: %zu", exclusion_below_one));
  pass = pass && exclusion_below_one == 0;
  return {pass, detail + fmt("threshold %.2f, exclusion misses %zu", kC5MinGenerated,
                             exclusion_below_one)};
}

// 6. Recovery state machine graph and transient absorption.
Verdict c6() {
  const FaultDefinition reg{RegisterStuckBit{5, 3, 1}, "register-walk"};
  const FaultDefinition line{AddressDecoderLine{2, LineMode::Flip}, "march"};
  std::vector<RecoveryPhase> phases{phase::Normal{}, phase::SelfTesting{0},
                                    phase::SelfTesting{2}, phase::AwaitingVariant{1, reg},
                                    phase::Fallback{1, FallbackReason::NoFaultFound},
                                    phase::Fallback{0, FallbackReason::GenerationFailed}};
  for (CoreIndex c = 0; c < 3; ++c)
    for (std::uint32_t a = 1; a <= 9; ++a) phases.push_back(phase::DynamicAdaptation{c, a});
  std::vector<HealthMap> healths;
  for (std::uint32_t e = 0; e < 6; ++e)
    for (std::uint32_t ok = 0; ok < 5; ++ok)
      for (CoreIndex c = 0; c < 3; ++c) {
        HealthMap h{{0, {}}, {1, {}}, {2, {}}};
        h[c] = CoreHealth{e, ok};
        healths.push_back(h);
      }
  auto consensus = [](std::vector<CoreIndex> d) { return VoteResult{Consensus{{1}, d}}; };
  const std::vector<VoteResult> votes{consensus({}),     consensus({0}),   consensus({1}),
                                      consensus({2}),    consensus({0, 1}), consensus({1, 2}),
                                      NoMajority{}};
  std::set<std::pair<PhaseKind, PhaseKind>> edges;
  std::size_t transitions = 0, illegal = 0;
  auto add = [&](const RecoveryPhase& from, const Transition& t) {
    ++transitions;
    const auto e = std::make_pair(phase_kind(from), phase_kind(t.phase));
    edges.insert(e);
    illegal += !is_allowed_edge(e.first, e.second);
  };
  for (const Thresholds& th : {Thresholds{3, 8, 0.95}, Thresholds{1, 1, 0.95}, Thresholds{2, 4, 0.5}})
    for (const auto& p : phases)
      for (const auto& h : healths) {
        for (const auto& v : votes) add(p, on_vote_result(p, h, v, th));
        for (const auto& rep : {std::vector<FaultDefinition>{}, std::vector<FaultDefinition>{reg},
                                std::vector<FaultDefinition>{line, reg}})
          add(p, on_selftest_report(p, h, rep));
        for (const auto& var :
             {std::optional<DiversityConfig>{}, std::optional<DiversityConfig>{DiversityConfig{}}})
          add(p, on_variant(p, h, var));
      }
  using K = PhaseKind;
  // Recovery procedure: detect, adapt dynamically, self-test, request a
  // variant, deploy or fall back.
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
      {K::Fallback, K::Fallback},
  };
  note(fmt("%zu transitions enumerated, %zu distinct kind edges", transitions, edges.size()));

  std::size_t trials = 0, escalations = 0, masked = 0;
  for (const auto& b : benchmarks()) {
    CampaignSpec s;
    s.benchmark = b.name;
    s.fault_space.classes = {FaultClass::Register, FaultClass::InstructionDecoder};
    s.fault_space.port = DecoderPort::Both;
    s.fault_space.transient = true;
    s.fault_space.transient_window = 100;
    s.fault_space.reg_hi = 8;
    s.trials = kC6TransientTrials / benchmarks().size();
    s.seed = 6;
    for (const auto& r : run_campaign(s).records) {
      ++trials;
      masked += r.status == FinalStatus::MaskedThroughout;
      escalations += r.phases_visited != std::vector<PhaseKind>{PhaseKind::Normal} ||
                     r.dynamic_attempts != 0;
    }
  }
  note(fmt("transient trials %zu, with voter-detected errors %zu", trials, masked));
  const bool graph = edges == expected && illegal == 0;
  return {graph && escalations == 0 && trials >= kC6TransientTrials,
          fmt("edge set %s, %zu transient trials, %zu escalations",
              graph ? "matches" : "differs", trials, escalations)};
}

// 7. Byte-identical campaign CSV from the same spec file.
Verdict c7() {
  CampaignSpec s;
  s.benchmark = "matmul2x2";
  s.fault_space.classes = {FaultClass::Register, FaultClass::MemoryCell,
                           FaultClass::AddressDecoder, FaultClass::InstructionDecoder};
  s.fault_space.mem_lo = 0;
  s.fault_space.mem_hi = 0x1100;
  s.trials = 150;
  s.seed = 7;
  s.test_random_count = 32;
  const auto dir = std::filesystem::temp_directory_path() / "adaptdiv_acceptance";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "spec.json").string();
  write_text_file(path, to_json(s).dump(2));
  std::vector<std::size_t> hashes;
  for (int rep = 0; rep < 2; ++rep) {
    const auto spec = campaign_spec_from_json(read_json_file(path));
    const auto res = rep == 0 ? run_campaign(spec) : run_campaign_serial(spec);
    const auto files = emit_report(res.summary, res.records, ReportFormat::Csv,
                                   (dir / ("run" + std::to_string(rep))).string());
    const auto csv = records_csv(res.records);
    hashes.push_back(std::hash<std::string>{}(csv));
  }
  return {hashes[0] == hashes[1],
          fmt("csv hashes %016zx %016zx", hashes[0], hashes[1])};
}

}  // namespace

int main(int argc, char** argv) {
  bool strict = false;
  std::set<std::string> only;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--strict") == 0)
      strict = true;
    else
      only.insert(argv[i]);
  }
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"C1", c1}, {"C2", c2}, {"C3", c3}, {"C4", c4}, {"C5", c5}, {"C6", c6}, {"C7", c7}};
  int failed = 0;
  for (const auto& [id, fn] : criteria) {
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double dt =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %s %s [%.1fs]\n", id.c_str(), v.pass ? "PASS" : "FAIL", v.detail.c_str(), dt);
    std::fflush(stdout);
    failed += !v.pass;
  }
  return strict ? failed : 0;
}
