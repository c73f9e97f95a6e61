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

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "adaptdiv/serialization.hpp"

namespace adaptdiv {

struct VariantRequest {
  Program program;
  FaultDefinition fault;
  double coverage_threshold = 0.95;
  std::vector<std::vector<Word>> test_inputs;
  std::size_t search_budget = 64;
  Seed seed = 0;  // seeds the random tail of the candidate list
  void validate() const;  // throws ConfigError
};

enum class Technique : std::uint8_t {
  RegisterExclusion,
  DataRandomization,
  MemoryGaps,
  BaseAddress,
  LayoutRandomization,
  NopInsertion,
  EncodingRandomization,
  RandomCombination,
};
std::string_view to_string(Technique t);

struct Candidate {
  Technique technique = Technique::RandomCombination;
  DiversityConfig config;
};

struct Generated {
  DiversityConfig config;
  double coverage = 0;
  std::size_t configs_tried = 0;
  Technique technique = Technique::RandomCombination;
  bool operator==(const Generated&) const = default;
};

struct Failed {
  double best_coverage = 0;
  std::size_t configs_tried = 0;
  bool operator==(const Failed&) const = default;
};

using VariantResponse = std::variant<Generated, Failed>;

// Fraction of inputs whose canonical output equals the golden output with
// the fault standing from cycle 0. Infeasible configs throw; an unknown
// substitution target is evaluated against every plausible target and the
// worst case is returned.
double estimate_masking_coverage(const Program& program, const DiversityConfig& config,
                                 const FaultKind& fault,
                                 const std::vector<std::vector<Word>>& test_inputs);
double estimate_masking_coverage_serial(const Program& program,
                                        const DiversityConfig& config,
                                        const FaultKind& fault,
                                        const std::vector<std::vector<Word>>& test_inputs);

// Fault-class-guided candidates followed by a seeded random tail; at most
// `budget` entries, no duplicates.
std::vector<Candidate> variant_candidates(const Program& program, const FaultKind& fault,
                                          Seed seed, std::size_t budget);

VariantResponse generate_variant(const VariantRequest& request);

// `{"program": name}` for registered benchmarks, else the inline text under
// "program_text" with an optional "program_name".
Json program_to_json(const Program& p);
Program program_from_json(const Json& j);

Json to_json(const VariantRequest& r);
VariantRequest variant_request_from_json(const Json& j);
Json to_json(const VariantResponse& r);
VariantResponse variant_response_from_json(const Json& j);

// Socket mode: one 4-byte big-endian length followed by the record.
class VariantServer {
 public:
  // Binds 127.0.0.1:port; port 0 picks a free port. Throws IoError.
  explicit VariantServer(std::uint16_t port = 0);
  ~VariantServer();
  VariantServer(const VariantServer&) = delete;
  VariantServer& operator=(const VariantServer&) = delete;

  std::uint16_t port() const { return port_; }
  // Answers requests until `max_requests` have been served (0: forever).
  void serve(std::size_t max_requests = 0);

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

VariantResponse request_variant(const std::string& host, std::uint16_t port,
                                const VariantRequest& request);

}  // namespace adaptdiv
