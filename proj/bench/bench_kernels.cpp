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

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>

#include "adaptdiv/benchmarks.hpp"
#include "adaptdiv/harness.hpp"
#include "adaptdiv/server.hpp"

using namespace adaptdiv;

namespace {

double seconds(const std::function<void()>& f, int reps) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / reps;
}

void row(const char* name, double serial, double parallel, bool same) {
  std::printf("%-28s serial %9.4f s  openmp %9.4f s  speedup %5.2fx  %s\n", name, serial,
              parallel, parallel > 0 ? serial / parallel : 0.0, same ? "identical" : "MISMATCH");
}

}  // namespace

int main() {
  std::printf("threads: %d\n", omp_get_max_threads());

  const auto& mm = find_benchmark("matmul4x4");
  const auto inputs = default_test_set(mm, 1, 256);
  const FaultKind line = AddressDecoderLine{4, LineMode::Stuck1};
  const auto config = random_config(11, mm.program);
  double a = 0, b = 0;
  const double ts = seconds([&] { a = estimate_masking_coverage_serial(mm.program, config, line, inputs); }, 3);
  const double tp = seconds([&] { b = estimate_masking_coverage(mm.program, config, line, inputs); }, 3);
  row("masking coverage (256 in)", ts, tp, a == b);

  CampaignSpec spec;
  spec.benchmark = "bitcount";
  spec.fault_space.classes = {FaultClass::AddressDecoder, FaultClass::Register};
  spec.trials = 400;
  spec.seed = 5;
  CampaignResult rs, rp;
  const double cs = seconds([&] { rs = run_campaign_serial(spec); }, 1);
  const double cp = seconds([&] { rp = run_campaign(spec); }, 1);
  row("campaign (400 trials)", cs, cp, records_csv(rs.records) == records_csv(rp.records));
  return 0;
}
