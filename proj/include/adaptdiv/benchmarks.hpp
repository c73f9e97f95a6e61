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

#include <functional>
#include <string>
#include <vector>

#include "adaptdiv/machine.hpp"
#include "adaptdiv/rng.hpp"

namespace adaptdiv {

struct Benchmark {
  std::string name;
  Program program;
  std::function<std::vector<Word>(Rng&)> generate;  // one typical input
  std::vector<std::vector<Word>> edge_cases;
};

const std::vector<Benchmark>& benchmarks();
std::vector<std::string> benchmark_names();
// Throws ConfigError for unregistered names.
const Benchmark& find_benchmark(std::string_view name);

// Assembly text of the matrix multiply kernel for n x n operands.
std::string matmul_source(std::size_t n);

// Seeded inputs followed by the benchmark's edge cases.
std::vector<std::vector<Word>> default_test_set(const Benchmark& b, Seed seed,
                                                std::size_t random_count = 64);

}  // namespace adaptdiv
