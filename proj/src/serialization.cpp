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

#include "adaptdiv/serialization.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace adaptdiv {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

const Json& field(const Json& j, const char* name) {
  if (!j.is_object() || !j.contains(name))
    throw ConfigError(std::string("missing field '") + name + "'");
  return j.at(name);
}

template <class T>
T get(const Json& j, const char* name) {
  try {
    return field(j, name).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("field '") + name + "': " + e.what());
  }
}

template <class T>
T get_or(const Json& j, const char* name, T fallback) {
  if (!j.is_object() || !j.contains(name) || j.at(name).is_null()) return fallback;
  return get<T>(j, name);
}

std::uint8_t get_u8(const Json& j, const char* name, unsigned hi) {
  const auto v = get<std::int64_t>(j, name);
  if (v < 0 || v >= static_cast<std::int64_t>(hi))
    throw ConfigError(std::string("field '") + name + "' out of range");
  return static_cast<std::uint8_t>(v);
}

LineMode parse_mode(const std::string& s) {
  for (auto m : {LineMode::Stuck0, LineMode::Stuck1, LineMode::Flip})
    if (to_string(m) == s) return m;
  throw ConfigError("unknown line mode '" + s + "'");
}

DecoderPort parse_port(const std::string& s) {
  for (auto p : {DecoderPort::Data, DecoderPort::Fetch, DecoderPort::Both})
    if (to_string(p) == s) return p;
  throw ConfigError("unknown decoder port '" + s + "'");
}

AccessSide parse_side(const std::string& s) {
  if (s == "read") return AccessSide::Read;
  if (s == "write") return AccessSide::Write;
  throw ConfigError("unknown access side '" + s + "'");
}

FaultClass parse_class(const std::string& s) {
  for (auto c : {FaultClass::Register, FaultClass::MemoryCell, FaultClass::AddressDecoder,
                 FaultClass::InstructionDecoder})
    if (to_string(c) == s) return c;
  throw ConfigError("unknown fault class '" + s + "'");
}

Json optional_seed(const std::optional<Seed>& s) {
  return s ? Json(*s) : Json(nullptr);
}

}  // namespace

std::string hex_word(Word w) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08X", w);
  return buf;
}

Word parse_word(const Json& j) {
  if (j.is_number_unsigned()) {
    const auto v = j.get<std::uint64_t>();
    if (v > 0xFFFFFFFFull) throw ConfigError("word out of range");
    return static_cast<Word>(v);
  }
  if (j.is_number_integer()) {
    const auto v = j.get<std::int64_t>();
    if (v < 0 || v > 0xFFFFFFFFll) throw ConfigError("word out of range");
    return static_cast<Word>(v);
  }
  if (!j.is_string()) throw ConfigError("word must be a number or hex string");
  const auto s = j.get<std::string>();
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(s, &pos, 0);
    if (pos != s.size() || v > 0xFFFFFFFFull) throw ConfigError("bad word '" + s + "'");
    return static_cast<Word>(v);
  } catch (const std::logic_error&) {
    throw ConfigError("bad word '" + s + "'");
  }
}

Json words_to_json(std::span<const Word> words) {
  Json out = Json::array();
  for (auto w : words) out.push_back(hex_word(w));
  return out;
}

std::vector<Word> words_from_json(const Json& j) {
  if (!j.is_array()) throw ConfigError("expected a word list");
  std::vector<Word> out;
  for (const auto& w : j) out.push_back(parse_word(w));
  return out;
}

Json to_json(const FaultKind& kind) {
  Json j;
  j["kind"] = std::string(kind_name(kind));
  std::visit(overloaded{
                 [&](const RegisterStuckBit& f) {
                   j["reg"] = f.reg;
                   j["bit"] = f.bit;
                   j["stuck_value"] = f.stuck_value;
                   j["side"] = std::string(to_string(f.side));
                 },
                 [&](const MemoryStuckBit& f) {
                   j["addr"] = hex_word(f.addr);
                   j["bit"] = f.bit;
                   j["stuck_value"] = f.stuck_value;
                   j["side"] = std::string(to_string(f.side));
                 },
                 [&](const AddressDecoderLine& f) {
                   j["line"] = f.line;
                   j["mode"] = std::string(to_string(f.mode));
                   j["port"] = std::string(to_string(f.port));
                 },
                 [&](const InstructionDecoderSub& f) {
                   j["from"] = f.from;
                   j["to"] = f.to ? Json(*f.to) : Json(nullptr);
                 },
             },
             kind);
  return j;
}

FaultKind fault_kind_from_json(const Json& j) {
  const auto kind = get<std::string>(j, "kind");
  if (kind == "RegisterStuckBit")
    return RegisterStuckBit{get_u8(j, "reg", kRegisterCount), get_u8(j, "bit", kWordBits),
                            get_u8(j, "stuck_value", 2),
                            parse_side(get_or<std::string>(j, "side", "read"))};
  if (kind == "MemoryStuckBit") {
    const auto addr = parse_word(field(j, "addr"));
    if (addr >= kDefaultMemorySize) throw ConfigError("field 'addr' out of range");
    return MemoryStuckBit{addr, get_u8(j, "bit", kWordBits), get_u8(j, "stuck_value", 2),
                          parse_side(get_or<std::string>(j, "side", "write"))};
  }
  if (kind == "AddressDecoderLine")
    return AddressDecoderLine{get_u8(j, "line", 16), parse_mode(get<std::string>(j, "mode")),
                              parse_port(get_or<std::string>(j, "port", "data"))};
  if (kind == "InstructionDecoderSub") {
    InstructionDecoderSub f{get_u8(j, "from", 256), std::nullopt};
    if (j.contains("to") && !j.at("to").is_null()) f.to = get_u8(j, "to", 256);
    return f;
  }
  throw ConfigError("unknown fault kind '" + kind + "'");
}

Json to_json(const Fault& fault) {
  Json j = to_json(fault.kind);
  std::visit(overloaded{
                 [&](const Transient& t) {
                   j["persistence"] = "transient";
                   j["cycle"] = t.cycle;
                 },
                 [&](const Permanent& p) {
                   j["persistence"] = "permanent";
                   j["cycle"] = p.onset_cycle;
                 },
             },
             fault.persistence);
  j["core"] = fault.core;
  return j;
}

Fault fault_from_json(const Json& j) {
  Fault f;
  f.kind = fault_kind_from_json(j);
  const auto p = get_or<std::string>(j, "persistence", "permanent");
  const auto cycle = get_or<Cycle>(j, "cycle", 0);
  if (p == "transient")
    f.persistence = Transient{cycle};
  else if (p == "permanent")
    f.persistence = Permanent{cycle};
  else
    throw ConfigError("unknown persistence '" + p + "'");
  f.core = get_or<CoreIndex>(j, "core", 0);
  return f;
}

Json to_json(const FaultPlan& plan) {
  Json j = Json::array();
  for (const auto& f : plan.faults()) j.push_back(to_json(f));
  return j;
}

FaultPlan fault_plan_from_json(const Json& j) {
  if (!j.is_array()) throw ConfigError("fault plan must be a list");
  std::vector<Fault> faults;
  for (const auto& f : j) faults.push_back(fault_from_json(f));
  return FaultPlan(std::move(faults));
}

Json to_json(const FaultDefinition& def) {
  Json j = to_json(def.kind);
  j["evidence"] = def.evidence;
  return j;
}

FaultDefinition fault_definition_from_json(const Json& j) {
  return FaultDefinition{fault_kind_from_json(j), get_or<std::string>(j, "evidence", "")};
}

Json to_json(const FaultSpace& s) {
  Json j;
  Json classes = Json::array();
  for (auto c : s.classes) classes.push_back(std::string(to_string(c)));
  j["classes"] = classes;
  j["reg_lo"] = s.reg_lo;
  j["reg_hi"] = s.reg_hi;
  j["mem_lo"] = hex_word(s.mem_lo);
  j["mem_hi"] = hex_word(s.mem_hi);
  j["line_lo"] = s.line_lo;
  j["line_hi"] = s.line_hi;
  Json modes = Json::array();
  for (auto m : s.line_modes) modes.push_back(std::string(to_string(m)));
  j["line_modes"] = modes;
  j["port"] = std::string(to_string(s.port));
  j["opcode_from"] = s.opcode_from;
  j["opcode_to"] = s.opcode_to;
  j["transient"] = s.transient;
  j["transient_window"] = s.transient_window;
  return j;
}

FaultSpace fault_space_from_json(const Json& j) {
  FaultSpace s;
  if (!j.is_object()) throw ConfigError("fault space must be a record");
  s.classes.clear();
  for (const auto& c : field(j, "classes")) {
    if (!c.is_string()) throw ConfigError("fault class must be a string");
    s.classes.push_back(parse_class(c.get<std::string>()));
  }
  s.reg_lo = get_or<RegIndex>(j, "reg_lo", s.reg_lo);
  s.reg_hi = get_or<RegIndex>(j, "reg_hi", s.reg_hi);
  if (j.contains("mem_lo")) s.mem_lo = parse_word(j.at("mem_lo"));
  if (j.contains("mem_hi")) s.mem_hi = parse_word(j.at("mem_hi"));
  s.line_lo = get_or<std::uint8_t>(j, "line_lo", s.line_lo);
  s.line_hi = get_or<std::uint8_t>(j, "line_hi", s.line_hi);
  if (j.contains("line_modes")) {
    s.line_modes.clear();
    for (const auto& m : j.at("line_modes")) s.line_modes.push_back(parse_mode(m.get<std::string>()));
  }
  s.port = parse_port(get_or<std::string>(j, "port", "data"));
  s.opcode_from = get_or<std::vector<OpcodeByte>>(j, "opcode_from", {});
  s.opcode_to = get_or<std::vector<OpcodeByte>>(j, "opcode_to", {});
  s.transient = get_or<bool>(j, "transient", false);
  s.transient_window = get_or<Cycle>(j, "transient_window", s.transient_window);
  return s;
}

Json to_json(const DiversityConfig& c) {
  Json j;
  j["gap_size"] = c.dynamic.gap_size;
  j["base_offset"] = c.dynamic.base_offset;
  j["variable_order_seed"] = optional_seed(c.dynamic.variable_order_seed);
  j["reexpr_key"] = c.dynamic.reexpr_key ? Json(hex_word(*c.dynamic.reexpr_key)) : Json(nullptr);
  j["reexpr_family"] = c.dynamic.reexpr_family ? Json(*c.dynamic.reexpr_family) : Json(nullptr);
  j["excluded_registers"] = c.static_.excluded_registers;
  j["nop_count"] = c.static_.nop_count;
  j["opcode_encoding_seed"] = optional_seed(c.static_.opcode_encoding_seed);
  return j;
}

DiversityConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("diversity config must be a record");
  DiversityConfig c;
  c.dynamic.gap_size = get_or<std::uint32_t>(j, "gap_size", 0);
  c.dynamic.base_offset = get_or<std::uint32_t>(j, "base_offset", 0);
  if (j.contains("variable_order_seed") && !j.at("variable_order_seed").is_null())
    c.dynamic.variable_order_seed = get<Seed>(j, "variable_order_seed");
  if (j.contains("reexpr_key") && !j.at("reexpr_key").is_null())
    c.dynamic.reexpr_key = parse_word(j.at("reexpr_key"));
  if (j.contains("reexpr_family") && !j.at("reexpr_family").is_null())
    c.dynamic.reexpr_family = get<std::string>(j, "reexpr_family");
  c.static_.excluded_registers = get_or<std::vector<RegIndex>>(j, "excluded_registers", {});
  c.static_.nop_count = get_or<std::uint32_t>(j, "nop_count", 0);
  if (j.contains("opcode_encoding_seed") && !j.at("opcode_encoding_seed").is_null())
    c.static_.opcode_encoding_seed = get<Seed>(j, "opcode_encoding_seed");
  validate(c);
  return c;
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return Json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace adaptdiv
