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

#include "adaptdiv/benchmarks.hpp"

#include <algorithm>

namespace adaptdiv {

namespace {

constexpr const char* kBitcount = R"(.name bitcount
.in 1
.out 1
.var x 1
.var count 1
.var one 1
.reexpr bitrotate
      LOAD r1, in
      STORE r1, x
      LOADI r2, 0
      STORE r2, count
      LOADI r3, 1
      STORE r3, one
      LOADI r0, 0
loop: LOAD r1, x
      BEQ r1, r0, done
      LOAD r3, one
      AND r4, r1, r3
      LOAD r2, count
      ADD r2, r2, r4
      STORE r2, count
      SHR r1, r1, r3
      STORE r1, x
      JMP loop
done: LOAD r2, count
      STORE r2, out
      HALT
)";

constexpr const char* kChecksum = R"(.name checksum32
.in 8
.out 1
.var i 1
.var sum 1
.reexpr addconst
      LOADI r1, 0
      STORE r1, sum
      STORE r1, i
loop: LOAD r2, i
      LOAD r3, in[r2]
      LOAD r1, sum
      ADD r1, r1, r3
      STORE r1, sum
      LOADI r4, 1
      ADD r2, r2, r4
      STORE r2, i
      LOADI r5, 8
      BLT r2, r5, loop
      LOAD r1, sum
      STORE r1, out
      HALT
)";

constexpr const char* kIsort = R"(.name isort
.in 8
.out 8
.var i 1
.var j 1
.var key 1
.reexpr valueoffset
       LOADI r0, 0
       LOADI r1, 1
       LOADI r9, 8
       STORE r0, i
copy:  LOAD r2, i
       LOAD r3, in[r2]
       STORE r3, out[r2]
       ADD r2, r2, r1
       STORE r2, i
       BLT r2, r9, copy
       STORE r1, i
outer: LOAD r2, i
       LOAD r3, out[r2]
       STORE r3, key
       STORE r2, j
inner: LOAD r4, j
       BEQ r4, r0, place
       SUB r5, r4, r1
       LOAD r6, out[r5]
       LOAD r3, key
       BLT r3, r6, shift
       JMP place
shift: STORE r6, out[r4]
       STORE r5, j
       JMP inner
place: LOAD r4, j
       LOAD r3, key
       STORE r3, out[r4]
       LOAD r2, i
       ADD r2, r2, r1
       STORE r2, i
       BLT r2, r9, outer
       HALT
)";

std::vector<Word> uniform_words(Rng& rng, std::size_t n, Word mask = ~Word{0}) {
  std::vector<Word> v(n);
  for (auto& w : v) w = static_cast<Word>(rng()) & mask;
  return v;
}

Benchmark make(const std::string& src, std::function<std::vector<Word>(Rng&)> gen,
               std::vector<std::vector<Word>> edges) {
  Benchmark b;
  b.program = parse_program(src);
  validate(b.program);
  b.name = b.program.name;
  b.generate = std::move(gen);
  b.edge_cases = std::move(edges);
  return b;
}

std::vector<Word> identity_times(std::size_t n, std::vector<Word> rhs) {
  std::vector<Word> v(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1;
  v.insert(v.end(), rhs.begin(), rhs.end());
  return v;
}

Benchmark make_matmul(std::size_t n) {
  const auto nn = n * n;
  std::vector<Word> ramp(nn);
  for (std::size_t i = 0; i < nn; ++i) ramp[i] = static_cast<Word>(i + 1);
  return make(
      matmul_source(n), [nn](Rng& rng) { return uniform_words(rng, 2 * nn, 0xFFFF); },
      {std::vector<Word>(2 * nn, 0), std::vector<Word>(2 * nn, 0xFFFFFFFF),
       identity_times(n, ramp)});
}

std::vector<Benchmark> build() {
  std::vector<Benchmark> v;
  v.push_back(make(
      kBitcount, [](Rng& rng) { return uniform_words(rng, 1); },
      {{0x00000000}, {0xFFFFFFFF}, {0x80000000}, {0x00000001}, {0xF0F0F0F0}}));
  v.push_back(make(
      kChecksum, [](Rng& rng) { return uniform_words(rng, 8); },
      {std::vector<Word>(8, 0), std::vector<Word>(8, 0xFFFFFFFF),
       {1, 2, 3, 4, 5, 6, 7, 8}}));
  v.push_back(make_matmul(2));
  v.push_back(make_matmul(4));
  v.push_back(make(
      kIsort, [](Rng& rng) { return uniform_words(rng, 8, 0x7FFFFFFF); },
      {{0, 1, 2, 3, 4, 5, 6, 7},
       {7, 6, 5, 4, 3, 2, 1, 0},
       std::vector<Word>(8, 5),
       std::vector<Word>(8, 0),
       {0x7FFFFFFF, 0, 0x7FFFFFFF, 1, 0x40000000, 3, 0x7FFFFFFE, 2}}));
  return v;
}

}  // namespace

std::string matmul_source(std::size_t n) {
  const auto nn = std::to_string(n * n);
  const auto ns = std::to_string(n);
  std::string s;
  s += ".name matmul" + ns + "x" + ns + "\n";
  s += ".in " + std::to_string(2 * n * n) + "\n";
  s += ".out " + nn + "\n";
  s += ".var i 1\n.var j 1\n.var k 1\n.var acc 1\n.reexpr rowperm\n";
  s += R"(       LOADI r0, 0
       LOADI r9, )" + ns + R"(
       LOADI r10, 1
       STORE r0, i
iloop: STORE r0, j
jloop: STORE r0, acc
       STORE r0, k
kloop: LOAD r1, i
       MUL r2, r1, r9
       LOAD r3, k
       ADD r4, r2, r3
       LOAD r5, in[r4]
       MUL r6, r3, r9
       LOAD r7, j
       ADD r6, r6, r7
       LOAD r8, in+)" + nn + R"([r6]
       MUL r5, r5, r8
       LOAD r11, acc
       ADD r11, r11, r5
       STORE r11, acc
       ADD r3, r3, r10
       STORE r3, k
       BLT r3, r9, kloop
       LOAD r1, i
       MUL r2, r1, r9
       LOAD r7, j
       ADD r2, r2, r7
       LOAD r11, acc
       STORE r11, out[r2]
       ADD r7, r7, r10
       STORE r7, j
       BLT r7, r9, jloop
       LOAD r1, i
       ADD r1, r1, r10
       STORE r1, i
       BLT r1, r9, iloop
       HALT
)";
  return s;
}

const std::vector<Benchmark>& benchmarks() {
  static const auto v = build();
  return v;
}

std::vector<std::string> benchmark_names() {
  std::vector<std::string> out;
  for (const auto& b : benchmarks()) out.push_back(b.name);
  return out;
}

const Benchmark& find_benchmark(std::string_view name) {
  for (const auto& b : benchmarks())
    if (b.name == name) return b;
  throw ConfigError("unknown benchmark: " + std::string(name));
}

std::vector<std::vector<Word>> default_test_set(const Benchmark& b, Seed seed,
                                                std::size_t random_count) {
  Rng rng = make_rng(derive_seed(seed, {0x7e57}));
  std::vector<std::vector<Word>> set;
  for (std::size_t i = 0; i < random_count; ++i) set.push_back(b.generate(rng));
  set.insert(set.end(), b.edge_cases.begin(), b.edge_cases.end());
  return set;
}

}  // namespace adaptdiv
