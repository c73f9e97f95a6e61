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

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "adaptdiv/benchmarks.hpp"
#include "adaptdiv/harness.hpp"
#include "adaptdiv/selftest.hpp"
#include "adaptdiv/server.hpp"

using namespace adaptdiv;

namespace {

constexpr int kSpecError = 1;
constexpr int kIoError = 2;

struct Options {
  std::string spec;
  std::optional<Seed> seed;
  std::string out;
  std::size_t trial = 0;
};

void emit(const Options& o, const Json& j) {
  const auto text = j.dump(2) + "\n";
  if (o.out.empty())
    std::cout << text;
  else
    write_text_file(o.out, text);
}

std::vector<Word> input_of(const Json& spec, const Program& p) {
  if (!spec.contains("input")) throw ConfigError("missing field 'input'");
  auto in = words_from_json(spec.at("input"));
  if (in.size() != p.inputs)
    throw ConfigError("input has " + std::to_string(in.size()) + " words, program takes " +
                      std::to_string(p.inputs));
  return in;
}

DiversityConfig config_of(const Json& spec, const char* name = "config") {
  return spec.contains(name) ? config_from_json(spec.at(name)) : DiversityConfig{};
}

Json outcome_json(const ExecutionOutcome& o) {
  return {{"status", std::string(to_string(o.status))},
          {"reason", std::string(to_string(o.reason))},
          {"outputs", words_to_json(o.outputs)},
          {"cycles", o.cycles}};
}

Json replica_json(const ReplicaResult& r) {
  if (const auto* w = std::get_if<std::vector<Word>>(&r)) return words_to_json(*w);
  const auto& f = std::get<ReplicaFailure>(r);
  return {{"status", std::string(to_string(f.status))},
          {"reason", std::string(to_string(f.reason))}};
}

int cmd_golden(const Options& o) {
  const auto spec = read_json_file(o.spec);
  const auto p = program_from_json(spec);
  emit(o, {{"program", p.name}, {"outputs", words_to_json(golden_run(p, input_of(spec, p)))}});
  return 0;
}

int cmd_run(const Options& o) {
  const auto spec = read_json_file(o.spec);
  const auto p = program_from_json(spec);
  const auto config = config_of(spec);
  const auto plan = spec.contains("faults") ? fault_plan_from_json(spec.at("faults")) : FaultPlan{};
  const auto limit = spec.value("cycle_limit", kDefaultCycleLimit);
  const auto image = assemble(p, config);
  ExecutionOutcome raw;
  const auto canon = run_canonical(image, config, input_of(spec, p), plan, limit, &raw);
  Json j = outcome_json(raw);
  j["canonical_outputs"] = canon ? words_to_json(*canon) : Json(nullptr);
  j["config"] = describe(config);
  emit(o, j);
  return 0;
}

int cmd_vote(const Options& o) {
  const auto spec = read_json_file(o.spec);
  const auto p = program_from_json(spec);
  NmrConfig nmr;
  if (spec.contains("nmr")) {
    nmr.n = spec.at("nmr").value("n", nmr.n);
    nmr.m = spec.at("nmr").value("m", NmrConfig::majority(nmr.n).m);
  }
  nmr.validate();
  std::vector<ReplicaSlot> slots;
  const auto configs = spec.value("configs", Json::array());
  for (std::size_t c = 0; c < nmr.n; ++c) {
    const auto cfg = c < configs.size() ? config_from_json(configs.at(c)) : DiversityConfig{};
    slots.push_back(ReplicaSlot::make(static_cast<CoreIndex>(c), p, cfg));
  }
  std::map<CoreIndex, std::vector<Fault>> per_core;
  if (spec.contains("faults")) {
    // Faults on several cores: each core gets its own plan.
    if (!spec.at("faults").is_array()) throw ConfigError("faults must be a list");
    for (const auto& f : spec.at("faults")) {
      auto fault = fault_from_json(f);
      per_core[fault.core].push_back(fault);
    }
  }
  std::map<CoreIndex, FaultPlan> plans;
  for (auto& [core, faults] : per_core) plans.emplace(core, FaultPlan(std::move(faults)));
  const auto results = execute_replicas(input_of(spec, p), slots, plans);
  const auto v = vote(results, nmr.m);
  Json j;
  Json reps = Json::object();
  for (const auto& [core, r] : results) reps[std::to_string(core)] = replica_json(r);
  j["replicas"] = reps;
  if (const auto* c = std::get_if<Consensus>(&v)) {
    j["result"] = "consensus";
    j["value"] = words_to_json(c->value);
    j["dissenters"] = c->dissenters;
  } else {
    j["result"] = "no_majority";
  }
  emit(o, j);
  return 0;
}

int cmd_selftest(const Options& o) {
  const auto spec = read_json_file(o.spec);
  CoreContext core;
  if (spec.contains("faults")) core.plan = fault_plan_from_json(spec.at("faults"));
  if (spec.contains("encoding_seed") && !spec.at("encoding_seed").is_null())
    core.encoding_seed = spec.at("encoding_seed").get<Seed>();
  const auto report = run_self_tests(core);
  Json found = Json::array();
  for (const auto& f : report.found) found.push_back(to_json(f));
  emit(o, {{"found", found},
           {"tests_run", report.tests_run},
           {"probe_crashed", report.probe_crashed}});
  return 0;
}

CampaignSpec campaign_of(const Options& o) {
  auto spec = campaign_spec_from_json(read_json_file(o.spec));
  if (o.seed) spec.seed = *o.seed;
  return spec;
}

int cmd_campaign(const Options& o) {
  const auto spec = campaign_of(o);
  const auto res = run_campaign(spec);
  const auto prefix = o.out.empty() ? std::string("campaign") : o.out;
  for (const auto& path : emit_report(res.summary, res.records, ReportFormat::Csv, prefix))
    std::cerr << "wrote " << path << "\n";
  std::cout << summary_json(res.summary).dump(2) << "\n";
  return 0;
}

int cmd_recover(const Options& o) {
  auto spec = campaign_of(o);
  spec.mode = CampaignMode::ClosedLoopRecovery;
  if (o.trial >= spec.trials) spec.trials = o.trial + 1;
  emit(o, to_json(run_trial(spec, o.trial)));
  return 0;
}

int cmd_serve(const Options& o) {
  const auto spec = read_json_file(o.spec);
  VariantServer server(spec.value("port", std::uint16_t{0}));
  std::cerr << "listening on 127.0.0.1:" << server.port() << std::endl;
  server.serve(spec.value("max_requests", std::size_t{0}));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive software diversity simulator"};
  app.require_subcommand(1);
  Options opt;
  std::string seed_text;
  struct Verb {
    const char* name;
    const char* help;
    int (*fn)(const Options&);
  };
  const Verb verbs[] = {
      {"golden", "fault-free reference output", cmd_golden},
      {"run", "execute one replica with optional faults", cmd_run},
      {"vote", "run N replicas and vote", cmd_vote},
      {"selftest", "run the self-test suite on a faulty core", cmd_selftest},
      {"campaign", "Monte Carlo fault-injection campaign", cmd_campaign},
      {"recover", "one closed-loop recovery trial", cmd_recover},
      {"serve", "variant server in socket mode", cmd_serve},
  };
  std::map<CLI::App*, const Verb*> dispatch;
  for (const auto& v : verbs) {
    auto* sub = app.add_subcommand(v.name, v.help);
    sub->add_option("spec", opt.spec, "spec file")->required();
    sub->add_option("--seed", seed_text, "override the spec seed");
    sub->add_option("--out", opt.out, "output path or prefix");
    if (std::string(v.name) == "recover") sub->add_option("--trial", opt.trial, "trial index");
    dispatch[sub] = &v;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kSpecError;
  }
  try {
    if (!seed_text.empty()) opt.seed = std::stoull(seed_text, nullptr, 0);
  } catch (const std::exception&) {
    std::cerr << "error: bad --seed '" << seed_text << "'\n";
    return kSpecError;
  }
  for (const auto& [sub, verb] : dispatch) {
    if (!sub->parsed()) continue;
    try {
      return verb->fn(opt);
    } catch (const IoError& e) {
      std::cerr << "io error: " << e.what() << "\n";
      return kIoError;
    } catch (const Error& e) {
      std::cerr << "spec error: " << e.what() << "\n";
      return kSpecError;
    } catch (const nlohmann::json::exception& e) {
      std::cerr << "spec error: " << e.what() << "\n";
      return kSpecError;
    }
  }
  return kSpecError;
}
