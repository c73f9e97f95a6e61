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

#include <algorithm>
#include <bit>
#include <cstdint>
#include <vector>

#include "adaptdiv/benchmarks.hpp"

namespace oracle {

using adaptdiv::Word;

inline std::vector<Word> popcount(const std::vector<Word>& in) {
  return {static_cast<Word>(std::popcount(in.at(0)))};
}

inline std::vector<Word> checksum(const std::vector<Word>& in) {
  Word s = 0;
  for (auto w : in) s += w;
  return {s};
}

inline std::vector<Word> matmul(const std::vector<Word>& in, std::size_t n) {
  std::vector<Word> c(n * n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k)
        c[i * n + j] += in[i * n + k] * in[n * n + k * n + j];
  return c;
}

inline std::vector<Word> sorted(std::vector<Word> in) {
  std::sort(in.begin(), in.end());
  return in;
}

inline std::vector<Word> reference(const std::string& name, const std::vector<Word>& in) {
  if (name == "bitcount") return popcount(in);
  if (name == "checksum32") return checksum(in);
  if (name == "matmul2x2") return matmul(in, 2);
  if (name == "matmul4x4") return matmul(in, 4);
  return sorted(in);
}

}  // namespace oracle
