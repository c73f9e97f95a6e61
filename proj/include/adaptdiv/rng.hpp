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

#include <initializer_list>
#include <random>

#include "adaptdiv/types.hpp"

namespace adaptdiv {

using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline Seed derive_seed(Seed base, std::initializer_list<std::uint64_t> salt) {
  Seed s = mix64(base);
  for (auto v : salt) s = mix64(s ^ mix64(v + 0x632BE59BD9B4E019ull));
  return s;
}

inline Rng make_rng(Seed seed) { return Rng{mix64(seed)}; }

// Uniform integer in [0, n).
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
  return std::uniform_int_distribution<std::uint64_t>{0, n - 1}(rng);
}

}  // namespace adaptdiv
