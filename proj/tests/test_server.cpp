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

#include <algorithm>
#include <thread>

#include "adaptdiv/benchmarks.hpp"
#include "adaptdiv/server.hpp"
#include "oracles.hpp"

using namespace adaptdiv;

namespace {

std::vector<std::vector<Word>> small_set(const Benchmark& b, std::size_t n = 12) {
  return default_test_set(b, 5, n);
}

// Masking check against the reference kernels instead of golden runs.
double oracle_coverage(const Program& p, const DiversityConfig& c, const FaultKind& f,
                       const std::vector<std::vector<Word>>& inputs, const Benchmark& b) {
  const auto image = assemble(p, c);
  const auto family = effective_family(p, c);
  const FaultPlan plan({Fault{f, Permanent{0}, 0}});
  std::size_t ok = 0;
  for (const auto& in : inputs) {
    const auto key = c.dynamic.reexpr_key.value_or(0);
    const auto raw = run(image, family ? reexpress(in, key, *family) : in, plan);
    if (raw.status != Status::Completed) continue;
    const auto out =
        family ? invert_reexpress(raw.outputs, key, *family, in.size()) : raw.outputs;
    if (out == oracle::reference(b.name, in)) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(inputs.size());
}

VariantRequest request_for(const Benchmark& b, FaultKind f, std::size_t budget = 64) {
  VariantRequest r;
  r.program = b.program;
  r.fault = {f, "test"};
  r.test_inputs = small_set(b);
  r.search_budget = budget;
  r.seed = 3;
  return r;
}

}  // namespace

TEST_CASE("excluding the faulty register gives full coverage") {
  const auto& b = find_benchmark("matmul2x2");
  const auto inputs = small_set(b);
  const FaultKind f = RegisterStuckBit{5, 0, 1};
  DiversityConfig c;
  c.static_.excluded_registers = {5};
  CHECK(estimate_masking_coverage(b.program, {}, f, inputs) < 1.0);
  CHECK(estimate_masking_coverage(b.program, c, f, inputs) == 1.0);
}

TEST_CASE("a memory fault outside the layout is masked") {
  const auto& b = find_benchmark("checksum32");
  const auto inputs = small_set(b);
  const auto layout = derive_layout(b.program, {});
  const Address a = layout.variable_address[*b.program.variable_index("in")];
  const FaultKind f = MemoryStuckBit{a, 0, 1, AccessSide::Write};
  CHECK(estimate_masking_coverage(b.program, {}, f, inputs) < 1.0);

  DiversityConfig c;
  c.dynamic.base_offset = 0x200;
  const auto moved = derive_layout(b.program, c.dynamic);
  for (std::size_t v = 0; v < b.program.variables.size(); ++v) {
    const auto lo = moved.variable_address[v];
    const auto hi = lo + b.program.variables[v].size;
    REQUIRE((a < lo || a >= hi));
  }
  CHECK(estimate_masking_coverage(b.program, c, f, inputs) == 1.0);
}

TEST_CASE("a fault corrupting every output gives zero coverage") {
  const auto& b = find_benchmark("bitcount");
  const auto inputs = small_set(b);
  const auto image = assemble(b.program);
  const Address out = image.output_addresses.at(0);
  std::optional<FaultKind> found;
  for (unsigned bit = 0; bit < 32 && !found; ++bit) {
    for (unsigned v = 0; v < 2 && !found; ++v) {
      const FaultKind f = MemoryStuckBit{out, static_cast<std::uint8_t>(bit),
                                         static_cast<std::uint8_t>(v), AccessSide::Write};
      if (oracle_coverage(b.program, {}, f, inputs, b) == 0.0) found = f;
    }
  }
  REQUIRE(found);
  CHECK(estimate_masking_coverage(b.program, {}, *found, inputs) == 0.0);
}

TEST_CASE("serial and parallel coverage agree") {
  for (const auto& b : benchmarks()) {
    const auto inputs = small_set(b, 20);
    for (Seed s = 0; s < 3; ++s) {
      const auto c = random_config(s, b.program);
      const FaultKind f = AddressDecoderLine{static_cast<std::uint8_t>(s), LineMode::Stuck1};
      CHECK(estimate_masking_coverage(b.program, c, f, inputs) ==
            estimate_masking_coverage_serial(b.program, c, f, inputs));
      CHECK(estimate_masking_coverage(b.program, c, f, inputs) ==
            oracle_coverage(b.program, c, f, inputs, b));
    }
  }
}

TEST_CASE("register faults are answered by exclusion first") {
  const auto& b = find_benchmark("matmul2x2");
  const auto resp = generate_variant(request_for(b, RegisterStuckBit{5, 2, 0}));
  const auto* g = std::get_if<Generated>(&resp);
  REQUIRE(g);
  CHECK(g->configs_tried == 1);
  CHECK(g->technique == Technique::RegisterExclusion);
  CHECK(g->config.static_.excluded_registers == std::vector<RegIndex>{5});
  CHECK(g->coverage == 1.0);
}

TEST_CASE("address decoder faults agree with an exhaustive layout search") {
  const auto& b = find_benchmark("bitcount");
  const auto inputs = small_set(b);
  for (auto mode : {LineMode::Stuck0, LineMode::Stuck1, LineMode::Flip}) {
    for (std::uint8_t line : {0, 1, 12}) {
      const FaultKind f = AddressDecoderLine{line, mode};
      bool exists = false;
      for (std::uint32_t gap = 0; gap <= 8 && !exists; ++gap)
        for (std::uint32_t base = 0; base < 0x2100 && !exists; base += 0x20) {
          DiversityConfig c;
          c.dynamic.gap_size = gap;
          c.dynamic.base_offset = base;
          exists = oracle_coverage(b.program, c, f, inputs, b) >= 0.95;
        }
      auto req = request_for(b, f);
      const auto resp = generate_variant(req);
      CAPTURE(location_string(f));
      CHECK(std::holds_alternative<Generated>(resp) == exists);
      if (const auto* g = std::get_if<Generated>(&resp)) {
        CHECK(g->coverage >= 0.95);
        CHECK(oracle_coverage(b.program, g->config, f, inputs, b) == g->coverage);
      }
    }
  }
}

TEST_CASE("decoder substitutions are answered by a re-encoding that avoids the byte") {
  const auto& b = find_benchmark("isort");
  for (OpcodeByte from : {0x13, 0x11, 0x1B}) {
    const auto resp = generate_variant(request_for(b, InstructionDecoderSub{from, 0x14}));
    const auto* g = std::get_if<Generated>(&resp);
    REQUIRE(g);
    CHECK(g->technique == Technique::EncodingRandomization);
    const auto enc = encoding_from_seed(g->config.static_.opcode_encoding_seed);
    CHECK(std::find(enc.physical.begin(), enc.physical.end(), from) == enc.physical.end());
  }
  const auto unknown = generate_variant(request_for(b, InstructionDecoderSub{0x13, std::nullopt}));
  CHECK(std::holds_alternative<Generated>(unknown));
}

TEST_CASE("generated coverage is recomputable and responses are deterministic") {
  const auto& b = find_benchmark("checksum32");
  const auto req = request_for(b, MemoryStuckBit{0x1001, 4, 1});
  const auto a = generate_variant(req);
  CHECK(a == generate_variant(req));
  const auto* g = std::get_if<Generated>(&a);
  REQUIRE(g);
  CHECK(g->coverage >= req.coverage_threshold);
  CHECK(estimate_masking_coverage_serial(b.program, g->config, req.fault.kind, req.test_inputs) ==
        g->coverage);
}

TEST_CASE("failed searches exhaust the budget and report the best coverage") {
  const auto& b = find_benchmark("checksum32");
  const FaultKind f = AddressDecoderLine{0, LineMode::Stuck0};
  const auto req = request_for(b, f, 10);
  const auto resp = generate_variant(req);
  const auto* fl = std::get_if<Failed>(&resp);
  REQUIRE(fl);
  CHECK(fl->configs_tried == 10);
  double best = 0;
  for (const auto& c : variant_candidates(b.program, f, req.seed, req.search_budget)) {
    double cov = 0;
    try {
      cov = estimate_masking_coverage_serial(b.program, c.config, f, req.test_inputs);
    } catch (const Error&) {
    }
    best = std::max(best, cov);
  }
  CHECK(fl->best_coverage == best);
}

TEST_CASE("candidate heads follow the class mapping") {
  const auto& p = find_benchmark("bitcount").program;
  auto head = [&](FaultKind f) { return variant_candidates(p, f, 0, 64).front().technique; };
  CHECK(head(RegisterStuckBit{2, 0, 0}) == Technique::RegisterExclusion);
  CHECK(head(MemoryStuckBit{0x1001, 0, 0}) == Technique::MemoryGaps);
  const auto line = head(AddressDecoderLine{3, LineMode::Stuck1});
  CHECK((line == Technique::BaseAddress || line == Technique::MemoryGaps));
  CHECK(head(InstructionDecoderSub{0x13, 0x14}) == Technique::EncodingRandomization);

  const auto all = variant_candidates(p, RegisterStuckBit{2, 0, 0}, 9, 64);
  CHECK(all.size() == 64);
  for (std::size_t i = 0; i < all.size(); ++i)
    for (std::size_t j = i + 1; j < all.size(); ++j) CHECK_FALSE(all[i].config == all[j].config);
  CHECK(variant_candidates(p, RegisterStuckBit{2, 0, 0}, 9, 5).size() == 5);
}

TEST_CASE("request validation") {
  auto req = request_for(find_benchmark("bitcount"), RegisterStuckBit{1, 0, 0});
  req.coverage_threshold = 0;
  CHECK_THROWS_AS(req.validate(), ConfigError);
  req.coverage_threshold = 1.0;
  req.test_inputs.clear();
  CHECK_THROWS_AS(req.validate(), ConfigError);
  req.test_inputs = {{1, 2}};
  CHECK_THROWS_AS(req.validate(), ConfigError);
}

TEST_CASE("requests and responses round-trip") {
  const auto& b = find_benchmark("bitcount");
  const auto req = request_for(b, AddressDecoderLine{0, LineMode::Flip});
  const auto back = variant_request_from_json(Json::parse(to_json(req).dump()));
  CHECK(back.program.source == req.program.source);
  CHECK(back.fault == req.fault);
  CHECK(back.test_inputs == req.test_inputs);
  CHECK(back.search_budget == req.search_budget);
  CHECK(back.seed == req.seed);
  CHECK(to_json(req).at("program") == "bitcount");

  Program inline_prog = parse_program(b.program.source + "; edited\n");
  auto req2 = req;
  req2.program = inline_prog;
  const auto j2 = to_json(req2);
  CHECK(j2.contains("program_text"));
  CHECK(variant_request_from_json(j2).program.source == inline_prog.source);

  const VariantResponse g = Generated{random_config(4, b.program), 0.96875, 3,
                                      Technique::MemoryGaps};
  const VariantResponse f = Failed{0.5, 64};
  CHECK(variant_response_from_json(Json::parse(to_json(g).dump())) == g);
  CHECK(variant_response_from_json(Json::parse(to_json(f).dump())) == f);
}

TEST_CASE("socket mode answers like the in-process server") {
  const auto& b = find_benchmark("bitcount");
  const auto req = request_for(b, RegisterStuckBit{1, 3, 1});
  VariantServer server(0);
  std::thread t([&] { server.serve(1); });
  const auto remote = request_variant("127.0.0.1", server.port(), req);
  t.join();
  CHECK(remote == generate_variant(req));
}

TEST_CASE("socket client reports connection failures") {
  std::uint16_t port = 0;
  {
    VariantServer s(0);
    port = s.port();
  }
  CHECK_THROWS_AS(request_variant("127.0.0.1", port, request_for(find_benchmark("bitcount"),
                                                                  RegisterStuckBit{})),
                  IoError);
}
