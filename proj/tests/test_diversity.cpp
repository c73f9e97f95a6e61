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

#include <bit>
#include <set>

#include "adaptdiv/benchmarks.hpp"
#include "adaptdiv/diversity.hpp"
#include "adaptdiv/rng.hpp"
#include "oracles.hpp"

using namespace adaptdiv;

namespace {

Program five_vars() {
  return parse_program(R"(.out 1
.var a 1
.var b 2
.var c 1
.var d 3
LOADI r1, 1
STORE r1, a
STORE r1, b+1
STORE r1, c
STORE r1, d+2
LOAD r2, d+2
STORE r2, out
HALT
)", "five");
}

void check_disjoint(const Program& p, const MemoryLayout& l) {
  std::set<Address> cells;
  for (std::size_t v = 0; v < p.variables.size(); ++v)
    for (std::size_t k = 0; k < p.variables[v].size; ++k) {
      const Address a = l.variable_address[v] + static_cast<Address>(k);
      CHECK(a < l.memory_size);
      CHECK(cells.insert(a).second);
    }
}

}  // namespace

TEST_CASE("identity layout") {
  const auto p = five_vars();
  const auto l = derive_layout(p, {});
  CHECK(l.data_base == kDefaultDataBase);
  CHECK(l.variable_order == std::vector<std::size_t>{0, 1, 2, 3, 4});
}

TEST_CASE("gap arithmetic") {
  const auto p = parse_program(".out 1\n.var a 1\n.var b 1\nHALT\n", "g");
  DynamicParams d;
  d.gap_size = 4;
  const auto l = derive_layout(p, d);
  // out, a, b each one word
  CHECK(l.variable_address == std::vector<Address>{kDefaultDataBase + 4,
                                                   kDefaultDataBase + 9,
                                                   kDefaultDataBase + 14});
  d.base_offset = 0x20;
  CHECK(derive_layout(p, d).variable_address[0] == kDefaultDataBase + 0x24);
}

TEST_CASE("order seeds permute variables") {
  const auto p = five_vars();
  std::set<std::vector<std::size_t>> seen;
  for (Seed s = 1; s <= 8; ++s) {
    DynamicParams d;
    d.variable_order_seed = s;
    d.gap_size = static_cast<std::uint32_t>(s % 3);
    const auto l = derive_layout(p, d);
    auto sorted = l.variable_order;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<std::size_t>{0, 1, 2, 3, 4});
    check_disjoint(p, l);
    seen.insert(l.variable_order);
  }
  CHECK(seen.size() >= 2);
}

TEST_CASE("bitrotate family") {
  CHECK(reexpress(std::vector<Word>{1}, 7, "bitrotate") == std::vector<Word>{1u << 7});
  CHECK(invert_reexpress(std::vector<Word>{5}, 7, "bitrotate", 1) == std::vector<Word>{5});
}

TEST_CASE("addconst family against the checksum oracle") {
  Rng rng = make_rng(3);
  for (int t = 0; t < 20; ++t) {
    std::vector<Word> x(8);
    for (auto& w : x) w = static_cast<Word>(rng());
    const Word k = static_cast<Word>(rng());
    const auto shifted = reexpress(x, k, "addconst");
    for (std::size_t i = 0; i < 8; ++i) CHECK(shifted[i] == x[i] + k);
    CHECK(invert_reexpress(oracle::checksum(shifted), k, "addconst", 8) ==
          oracle::checksum(x));
  }
}

TEST_CASE("rowperm and valueoffset inverses") {
  Rng rng = make_rng(5);
  for (int t = 0; t < 20; ++t) {
    std::vector<Word> m(32);
    for (auto& w : m) w = static_cast<Word>(rng());
    const Word k = static_cast<Word>(rng());
    const auto c = oracle::matmul(reexpress(m, k, "rowperm"), 4);
    CHECK(invert_reexpress(c, k, "rowperm", 32) == oracle::matmul(m, 4));

    std::vector<Word> s(8);
    for (auto& w : s) w = static_cast<Word>(rng()) & 0x7FFFFFFF;
    const auto out = oracle::sorted(reexpress(s, k, "valueoffset"));
    CHECK(invert_reexpress(out, k, "valueoffset", 8) == oracle::sorted(s));
  }
}

TEST_CASE("key zero is identity for every family") {
  const std::vector<Word> x{1, 2, 3, 4, 5, 6, 7, 8};
  for (const auto& f : family_names()) {
    CHECK(reexpress(x, 0, f) == x);
    CHECK(invert_reexpress(x, 0, f, 8) == x);
  }
  CHECK_THROWS_AS(reexpress(x, 1, "nope"), UnknownFamily);
}

TEST_CASE("register exclusion remaps and preserves outputs") {
  const auto& b = find_benchmark("bitcount");
  DiversityConfig c;
  c.static_.excluded_registers = {1};
  const auto img = assemble(b.program, c);
  for (const auto& ins : img.code) {
    for (auto r : register_use(ins).reads) CHECK(r != 1);
    for (auto r : register_use(ins).writes) CHECK(r != 1);
  }
  for (const auto& x : default_test_set(b, 1, 8))
    CHECK(run(img, x).outputs == oracle::popcount(x));
}

TEST_CASE("nops shift the single block entry") {
  const auto p = parse_program(".out 1\nLOADI r1, 3\nSTORE r1, out\nHALT\n", "one");
  StaticParams s;
  s.nop_count = 2;
  const auto st = apply_static(p, s);
  REQUIRE(st.code.size() == 5);
  CHECK(st.code[2].op == Opcode::LoadI);
  CHECK(st.code[0].op == Opcode::Jmp);
  CHECK(st.code[0].target_index == 1);
}

TEST_CASE("branch targets point at the nops of their block") {
  const auto& p = find_benchmark("bitcount").program;
  StaticParams s;
  s.nop_count = 3;
  const auto st = apply_static(p, s);
  auto is_nop = [&](std::size_t i) {
    return st.code[i].op == Opcode::Jmp && st.code[i].target_index == i + 1;
  };
  CHECK(st.code.size() == p.code.size() + 3 * 4);
  for (std::size_t i = 0; i < st.code.size(); ++i) {
    if (!is_branch(st.code[i].op) || is_nop(i)) continue;
    const auto t = st.code[i].target_index;
    CHECK(is_nop(t));
    CHECK(is_nop(t + 1));
    CHECK(is_nop(t + 2));
    CHECK(!is_nop(t + 3));
  }
}

TEST_CASE("identity seed gives identity encoding; seeds give bijections") {
  CHECK(encoding_from_seed(std::nullopt) == OpcodeEncoding::identity());
  for (Seed s = 0; s < 64; ++s) {
    const auto e = encoding_from_seed(s);
    std::set<OpcodeByte> bytes(e.physical.begin(), e.physical.end());
    CHECK(bytes.size() == kOpcodeCount);
    CHECK(!bytes.count(0));
    for (std::size_t i = 0; i < kOpcodeCount; ++i)
      CHECK(e.decode[e.physical[i]] == static_cast<Opcode>(i));
  }
}

TEST_CASE("config validation") {
  DiversityConfig c;
  c.static_.excluded_registers = {1, 2, 3, 4, 5};
  CHECK_THROWS_AS(validate(c), ConfigError);
  c.static_.excluded_registers = {3, 1};
  CHECK_THROWS_AS(validate(c), ConfigError);
  c.static_.excluded_registers = {};
  c.dynamic.reexpr_family = "nope";
  CHECK_THROWS_AS(validate(c), UnknownFamily);
}

TEST_CASE("transparency over random configs") {
  for (const auto& b : benchmarks()) {
    const auto xs = default_test_set(b, 9, 4);
    for (Seed s = 0; s < 25; ++s) {
      const auto c = random_config(derive_seed(s, {17}), b.program);
      const auto img = assemble(b.program, c);
      check_disjoint(b.program, img.layout);
      for (auto r : c.static_.excluded_registers)
        for (const auto& ins : img.code) {
          for (auto u : register_use(ins).reads) CHECK(u != r);
          for (auto u : register_use(ins).writes) CHECK(u != r);
        }
      for (const auto& x : xs) {
        INFO(b.name << " " << describe(c));
        CHECK(run_canonical(img, c, x) == golden_run(b.program, x));
      }
    }
  }
}
