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

#include <string>

#include "json.hpp"

#include "adaptdiv/diversity.hpp"
#include "adaptdiv/faults.hpp"

namespace adaptdiv {

using Json = nlohmann::ordered_json;

// Structured records with fixed field names. Every from_json throws
// ConfigError on a missing or malformed field.
Json to_json(const FaultKind& kind);
FaultKind fault_kind_from_json(const Json& j);

Json to_json(const Fault& fault);
Fault fault_from_json(const Json& j);

Json to_json(const FaultPlan& plan);
FaultPlan fault_plan_from_json(const Json& j);

Json to_json(const FaultDefinition& def);
FaultDefinition fault_definition_from_json(const Json& j);

Json to_json(const FaultSpace& space);
FaultSpace fault_space_from_json(const Json& j);

Json to_json(const DiversityConfig& config);
DiversityConfig config_from_json(const Json& j);

// Words are written as "0x%08X" strings.
std::string hex_word(Word w);
Word parse_word(const Json& j);
Json words_to_json(std::span<const Word> words);
std::vector<Word> words_from_json(const Json& j);

// Reads a whole file and parses it; throws IoError or ConfigError.
Json read_json_file(const std::string& path);
// Throws IoError.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace adaptdiv
