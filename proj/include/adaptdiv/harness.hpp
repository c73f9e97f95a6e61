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

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adaptdiv/controller.hpp"
#include "adaptdiv/serialization.hpp"

namespace adaptdiv {

enum class CampaignMode : std::uint8_t { SingleShotVoting, ClosedLoopRecovery };
std::string_view to_string(CampaignMode m);

struct CampaignSpec {
  std::string benchmark = "bitcount";
  NmrConfig nmr;
  FaultSpace fault_space;
  std::size_t trials = 1;
  Seed seed = 0;
  Thresholds thresholds;
  CampaignMode mode = CampaignMode::ClosedLoopRecovery;
  std::uint32_t onset_window = 10;  // onset round drawn from [0, window)
  std::uint32_t observe_rounds = 20;  // quiet rounds after onset before a trial ends
  std::uint32_t max_rounds = 200;
  std::size_t variant_budget = 64;
  std::size_t test_random_count = 64;
  void validate() const;  // throws ConfigError
};

enum class FinalStatus : std::uint8_t {
  MaskedThroughout,
  RecoveredDynamic,
  RecoveredStatic,
  FallbackAlarm,
  Undetected,
};
std::string_view to_string(FinalStatus s);
inline constexpr std::size_t kFinalStatusCount = 5;

struct RoundVote {
  std::uint64_t round = 0;
  bool consensus = true;
  bool correct = true;  // consensus equals the golden output
  std::vector<CoreIndex> dissenters;
  bool operator==(const RoundVote&) const = default;
};

struct TrialRecord {
  std::size_t trial = 0;
  Fault fault;
  std::uint64_t onset_round = 0;
  std::optional<std::uint64_t> rounds_to_detect;
  std::uint32_t dynamic_attempts = 0;
  std::vector<PhaseKind> phases_visited;  // in order of first visit
  std::optional<DiversityConfig> variant;
  std::optional<FaultDefinition> reported_fault;
  std::vector<RoundVote> votes;
  FinalStatus status = FinalStatus::Undetected;
  bool operator==(const TrialRecord&) const = default;
};

struct ClassBreakdown {
  std::size_t trials = 0;
  std::array<std::size_t, kFinalStatusCount> counts{};
};

struct CampaignSummary {
  std::size_t trials = 0;
  std::array<std::size_t, kFinalStatusCount> counts{};
  std::map<FaultClass, ClassBreakdown> per_class;
  std::size_t detected = 0;  // trials with at least one voter mismatch
  std::size_t recovered_dynamic_detected = 0;
  double runtime_seconds = 0;

  double fraction(FinalStatus s) const;
  // Dynamic recoveries among trials where the voter detected errors.
  double dynamic_recovery_rate() const;
};

struct CampaignResult {
  CampaignSummary summary;
  std::vector<TrialRecord> records;  // ascending trial index
};

TrialRecord run_trial(const CampaignSpec& spec, std::size_t index);
CampaignResult run_campaign(const CampaignSpec& spec);
CampaignResult run_campaign_serial(const CampaignSpec& spec);
CampaignSummary summarize(const std::vector<TrialRecord>& records);

inline constexpr const char* kCsvHeader =
    "trial,fault_kind,fault_location,onset,rounds_to_detect,dynamic_attempts,final_status,"
    "variant_config";
std::string records_csv(const std::vector<TrialRecord>& records);
Json summary_json(const CampaignSummary& summary);
Json to_json(const TrialRecord& record);

enum class ReportFormat : std::uint8_t { Csv, StructuredText };
// Writes <prefix>.csv or <prefix>.json (records) plus <prefix>_summary.json.
// Returns the paths written; throws IoError naming the path.
std::vector<std::string> emit_report(const CampaignSummary& summary,
                                     const std::vector<TrialRecord>& records,
                                     ReportFormat format, const std::string& prefix);

Json to_json(const CampaignSpec& spec);
CampaignSpec campaign_spec_from_json(const Json& j);

}  // namespace adaptdiv
