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

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "adaptdiv/types.hpp"

namespace adaptdiv {

// Which access the stuck bit is forced on.
enum class AccessSide : std::uint8_t { Read, Write };

struct RegisterStuckBit {
  RegIndex reg = 0;
  std::uint8_t bit = 0;
  std::uint8_t stuck_value = 0;
  AccessSide side = AccessSide::Read;
  auto operator<=>(const RegisterStuckBit&) const = default;
};

struct MemoryStuckBit {
  Address addr = 0;
  std::uint8_t bit = 0;
  std::uint8_t stuck_value = 0;
  AccessSide side = AccessSide::Write;
  auto operator<=>(const MemoryStuckBit&) const = default;
};

enum class LineMode : std::uint8_t { Stuck0, Stuck1, Flip };

// Decoder port the faulty line sits on. Data-port faults hit loads, stores
// and I/O transfers; fetch-port faults hit instruction fetches.
enum class DecoderPort : std::uint8_t { Data, Fetch, Both };

struct AddressDecoderLine {
  std::uint8_t line = 0;
  LineMode mode = LineMode::Flip;
  DecoderPort port = DecoderPort::Data;
  auto operator<=>(const AddressDecoderLine&) const = default;
};

// `to` is empty only in self-test reports whose target byte could not be
// recovered; injected faults always carry it.
struct InstructionDecoderSub {
  OpcodeByte from = 0;
  std::optional<OpcodeByte> to;
  auto operator<=>(const InstructionDecoderSub&) const = default;
};

using FaultKind = std::variant<RegisterStuckBit, MemoryStuckBit,
                               AddressDecoderLine, InstructionDecoderSub>;

enum class FaultClass : std::uint8_t {
  Register,
  MemoryCell,
  AddressDecoder,
  InstructionDecoder
};

FaultClass fault_class(const FaultKind& kind);
std::string_view to_string(FaultClass c);
std::string_view to_string(LineMode m);
std::string_view to_string(DecoderPort p);
std::string_view to_string(AccessSide s);
std::string_view kind_name(const FaultKind& kind);
// Compact location string used in reports, e.g. "r5:b3:s1".
std::string location_string(const FaultKind& kind);

// Deterministic (kind, location) order used to pick among several findings.
bool kind_less(const FaultKind& a, const FaultKind& b);
// Same (kind, location) pair ignoring the stuck value / mode / target.
bool same_location(const FaultKind& a, const FaultKind& b);

struct Transient {
  Cycle cycle = 0;
  auto operator<=>(const Transient&) const = default;
};
struct Permanent {
  Cycle onset_cycle = 0;
  auto operator<=>(const Permanent&) const = default;
};
using Persistence = std::variant<Transient, Permanent>;

bool is_active(const Persistence& p, Cycle cycle);

struct Fault {
  FaultKind kind;
  Persistence persistence = Permanent{0};
  CoreIndex core = 0;
  bool operator==(const Fault&) const = default;
};

struct FaultDefinition {
  FaultKind kind;
  std::string evidence;
  bool operator==(const FaultDefinition&) const = default;
};

// Immutable set of faults on a single core.
class FaultPlan {
 public:
  FaultPlan() = default;
  // Throws ConfigError when faults span cores or repeat a location.
  explicit FaultPlan(std::vector<Fault> faults);

  const std::vector<Fault>& faults() const { return faults_; }
  bool empty() const { return faults_.empty(); }
  std::optional<CoreIndex> core() const;

  bool operator==(const FaultPlan&) const = default;

 private:
  std::vector<Fault> faults_;
};

// Pure fault views. Each returns the value observed at an architectural
// access when the plan is in effect at `cycle`.
Word view_register_read(Word raw, RegIndex reg, const FaultPlan& plan,
                        Cycle cycle);
Word view_register_write(Word raw, RegIndex reg, const FaultPlan& plan,
                         Cycle cycle);
Word view_memory_read(Word raw, Address addr, const FaultPlan& plan,
                      Cycle cycle);
Word view_memory_write(Word raw, Address addr, const FaultPlan& plan,
                       Cycle cycle);
Address view_address(Address addr, const FaultPlan& plan, Cycle cycle,
                     std::size_t memory_size = kDefaultMemorySize,
                     DecoderPort port = DecoderPort::Data);
OpcodeByte view_opcode(OpcodeByte op, const FaultPlan& plan, Cycle cycle);

inline Word force_bit(Word raw, unsigned bit, unsigned value) {
  const Word mask = Word{1} << bit;
  return value ? (raw | mask) : (raw & ~mask);
}

Address apply_line(Address addr, const AddressDecoderLine& f);

// Finite fault population to sample from.
struct FaultSpace {
  std::vector<FaultClass> classes;

  RegIndex reg_lo = 0, reg_hi = 16;  // [lo, hi)
  Address mem_lo = 0, mem_hi = 0;    // [lo, hi)
  std::uint8_t line_lo = 0, line_hi = 16;
  std::vector<LineMode> line_modes{LineMode::Stuck0, LineMode::Stuck1,
                                   LineMode::Flip};
  DecoderPort port = DecoderPort::Data;
  std::vector<OpcodeByte> opcode_from;  // empty: identity-encoded opcodes
  std::vector<OpcodeByte> opcode_to;    // empty: all 256 bytes

  bool transient = false;
  Cycle transient_window = 1000;  // Transient cycle drawn from [0, window)

  bool operator==(const FaultSpace&) const = default;
};

std::uint64_t space_size(const FaultSpace& space);

// Uniform draw over the finite space; identical seed gives identical list.
std::vector<Fault> sample_faults(Seed seed, const FaultSpace& space,
                                 std::size_t n);

// Enumerates every fault of a class with Permanent{0}; memory cells are
// enumerated only when the range is small, callers should sample instead.
std::vector<FaultKind> enumerate_kinds(const FaultSpace& space);

}  // namespace adaptdiv
