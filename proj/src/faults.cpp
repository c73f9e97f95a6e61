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

#include "adaptdiv/faults.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <tuple>

#include "adaptdiv/rng.hpp"

namespace adaptdiv {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

std::string hex(std::uint64_t v, int width = 0) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "0x%0*llX", width,
                static_cast<unsigned long long>(v));
  return buf;
}

// Location key ignoring the stuck value / mode / target.
std::tuple<std::size_t, std::uint64_t, std::uint64_t> location_key(
    const FaultKind& k) {
  return std::visit(
      overloaded{
          [&](const RegisterStuckBit& f) {
            return std::tuple<std::size_t, std::uint64_t, std::uint64_t>{
                k.index(), f.reg, f.bit};
          },
          [&](const MemoryStuckBit& f) {
            return std::tuple<std::size_t, std::uint64_t, std::uint64_t>{
                k.index(), f.addr, f.bit};
          },
          [&](const AddressDecoderLine& f) {
            return std::tuple<std::size_t, std::uint64_t, std::uint64_t>{
                k.index(), f.line, static_cast<std::uint64_t>(f.port)};
          },
          [&](const InstructionDecoderSub& f) {
            return std::tuple<std::size_t, std::uint64_t, std::uint64_t>{
                k.index(), f.from, 0};
          },
      },
      k);
}

}  // namespace

FaultClass fault_class(const FaultKind& kind) {
  return static_cast<FaultClass>(kind.index());
}

std::string_view to_string(FaultClass c) {
  switch (c) {
    case FaultClass::Register: return "register";
    case FaultClass::MemoryCell: return "memory";
    case FaultClass::AddressDecoder: return "address_decoder";
    case FaultClass::InstructionDecoder: return "instruction_decoder";
  }
  return "?";
}

std::string_view to_string(LineMode m) {
  switch (m) {
    case LineMode::Stuck0: return "stuck0";
    case LineMode::Stuck1: return "stuck1";
    case LineMode::Flip: return "flip";
  }
  return "?";
}

std::string_view to_string(DecoderPort p) {
  switch (p) {
    case DecoderPort::Data: return "data";
    case DecoderPort::Fetch: return "fetch";
    case DecoderPort::Both: return "both";
  }
  return "?";
}

std::string_view to_string(AccessSide s) {
  return s == AccessSide::Read ? "read" : "write";
}

std::string_view kind_name(const FaultKind& kind) {
  return std::visit(overloaded{
                        [](const RegisterStuckBit&) { return "RegisterStuckBit"; },
                        [](const MemoryStuckBit&) { return "MemoryStuckBit"; },
                        [](const AddressDecoderLine&) { return "AddressDecoderLine"; },
                        [](const InstructionDecoderSub&) { return "InstructionDecoderSub"; },
                    },
                    kind);
}

std::string location_string(const FaultKind& kind) {
  return std::visit(
      overloaded{
          [](const RegisterStuckBit& f) {
            return "r" + std::to_string(f.reg) + ":b" + std::to_string(f.bit) +
                   ":s" + std::to_string(f.stuck_value);
          },
          [](const MemoryStuckBit& f) {
            return hex(f.addr, 4) + ":b" + std::to_string(f.bit) + ":s" +
                   std::to_string(f.stuck_value);
          },
          [](const AddressDecoderLine& f) {
            return "line" + std::to_string(f.line) + ":" +
                   std::string(to_string(f.mode)) + ":" +
                   std::string(to_string(f.port));
          },
          [](const InstructionDecoderSub& f) {
            return hex(f.from, 2) + "->" + (f.to ? hex(*f.to, 2) : "unknown");
          },
      },
      kind);
}

bool kind_less(const FaultKind& a, const FaultKind& b) {
  const auto ka = location_key(a), kb = location_key(b);
  if (ka != kb) return ka < kb;
  return a < b;
}

bool same_location(const FaultKind& a, const FaultKind& b) {
  return location_key(a) == location_key(b);
}

bool is_active(const Persistence& p, Cycle cycle) {
  return std::visit(overloaded{
                        [&](const Transient& t) { return t.cycle == cycle; },
                        [&](const Permanent& t) { return cycle >= t.onset_cycle; },
                    },
                    p);
}

FaultPlan::FaultPlan(std::vector<Fault> faults) : faults_(std::move(faults)) {
  for (std::size_t i = 0; i < faults_.size(); ++i) {
    if (faults_[i].core != faults_[0].core)
      throw ConfigError("fault plan spans several cores");
    if (auto* s = std::get_if<InstructionDecoderSub>(&faults_[i].kind)) {
      if (!s->to) throw ConfigError("injected decoder fault needs a target");
      if (*s->to == s->from) throw ConfigError("decoder fault from == to");
    }
    for (std::size_t j = 0; j < i; ++j)
      if (same_location(faults_[i].kind, faults_[j].kind))
        throw ConfigError("duplicate fault location " +
                          location_string(faults_[i].kind));
  }
}

std::optional<CoreIndex> FaultPlan::core() const {
  if (faults_.empty()) return std::nullopt;
  return faults_.front().core;
}

Word view_register_read(Word raw, RegIndex reg, const FaultPlan& plan,
                        Cycle cycle) {
  for (const auto& f : plan.faults())
    if (auto* r = std::get_if<RegisterStuckBit>(&f.kind))
      if (r->reg == reg && r->side == AccessSide::Read &&
          is_active(f.persistence, cycle))
        raw = force_bit(raw, r->bit, r->stuck_value);
  return raw;
}

Word view_register_write(Word raw, RegIndex reg, const FaultPlan& plan,
                         Cycle cycle) {
  for (const auto& f : plan.faults())
    if (auto* r = std::get_if<RegisterStuckBit>(&f.kind))
      if (r->reg == reg && r->side == AccessSide::Write &&
          is_active(f.persistence, cycle))
        raw = force_bit(raw, r->bit, r->stuck_value);
  return raw;
}

Word view_memory_read(Word raw, Address addr, const FaultPlan& plan,
                      Cycle cycle) {
  for (const auto& f : plan.faults())
    if (auto* m = std::get_if<MemoryStuckBit>(&f.kind))
      if (m->addr == addr && m->side == AccessSide::Read &&
          is_active(f.persistence, cycle))
        raw = force_bit(raw, m->bit, m->stuck_value);
  return raw;
}

Word view_memory_write(Word raw, Address addr, const FaultPlan& plan,
                       Cycle cycle) {
  for (const auto& f : plan.faults())
    if (auto* m = std::get_if<MemoryStuckBit>(&f.kind))
      if (m->addr == addr && m->side == AccessSide::Write &&
          is_active(f.persistence, cycle))
        raw = force_bit(raw, m->bit, m->stuck_value);
  return raw;
}

Address apply_line(Address addr, const AddressDecoderLine& f) {
  const Address mask = Address{1} << f.line;
  switch (f.mode) {
    case LineMode::Stuck0: return addr & ~mask;
    case LineMode::Stuck1: return addr | mask;
    case LineMode::Flip: return addr ^ mask;
  }
  return addr;
}

Address view_address(Address addr, const FaultPlan& plan, Cycle cycle,
                     std::size_t memory_size, DecoderPort port) {
  for (const auto& f : plan.faults())
    if (auto* a = std::get_if<AddressDecoderLine>(&f.kind))
      if ((a->port == DecoderPort::Both || a->port == port) &&
          is_active(f.persistence, cycle))
        addr = apply_line(addr, *a);
  return static_cast<Address>(addr % memory_size);
}

OpcodeByte view_opcode(OpcodeByte op, const FaultPlan& plan, Cycle cycle) {
  // Substitutions are looked up on the original byte, so they do not chain.
  for (const auto& f : plan.faults())
    if (auto* s = std::get_if<InstructionDecoderSub>(&f.kind))
      if (s->from == op && s->to && is_active(f.persistence, cycle))
        return *s->to;
  return op;
}

namespace {

std::vector<OpcodeByte> from_bytes(const FaultSpace& s) {
  if (!s.opcode_from.empty()) return s.opcode_from;
  std::vector<OpcodeByte> v;
  for (std::size_t i = 0; i < kOpcodeCount; ++i)
    v.push_back(static_cast<OpcodeByte>(kIdentityOpcodeBase + i));
  return v;
}

std::vector<OpcodeByte> to_bytes(const FaultSpace& s) {
  if (!s.opcode_to.empty()) return s.opcode_to;
  std::vector<OpcodeByte> v(256);
  for (int i = 0; i < 256; ++i) v[i] = static_cast<OpcodeByte>(i);
  return v;
}

std::uint64_t class_size(const FaultSpace& s, FaultClass c) {
  switch (c) {
    case FaultClass::Register:
      return s.reg_hi > s.reg_lo ? std::uint64_t(s.reg_hi - s.reg_lo) * 64 : 0;
    case FaultClass::MemoryCell:
      return s.mem_hi > s.mem_lo ? std::uint64_t(s.mem_hi - s.mem_lo) * 64 : 0;
    case FaultClass::AddressDecoder:
      return s.line_hi > s.line_lo
                 ? std::uint64_t(s.line_hi - s.line_lo) * s.line_modes.size()
                 : 0;
    case FaultClass::InstructionDecoder: {
      std::uint64_t n = 0;
      const auto tos = to_bytes(s);
      for (auto f : from_bytes(s))
        n += tos.size() - std::count(tos.begin(), tos.end(), f);
      return n;
    }
  }
  return 0;
}

FaultKind decode_index(const FaultSpace& s, FaultClass c, std::uint64_t i) {
  switch (c) {
    case FaultClass::Register:
      return RegisterStuckBit{static_cast<RegIndex>(s.reg_lo + i / 64),
                              static_cast<std::uint8_t>((i % 64) / 2),
                              static_cast<std::uint8_t>(i % 2)};
    case FaultClass::MemoryCell:
      return MemoryStuckBit{static_cast<Address>(s.mem_lo + i / 64),
                            static_cast<std::uint8_t>((i % 64) / 2),
                            static_cast<std::uint8_t>(i % 2)};
    case FaultClass::AddressDecoder: {
      const auto m = s.line_modes.size();
      return AddressDecoderLine{static_cast<std::uint8_t>(s.line_lo + i / m),
                                s.line_modes[i % m], s.port};
    }
    case FaultClass::InstructionDecoder: {
      const auto tos = to_bytes(s);
      for (auto f : from_bytes(s)) {
        for (auto t : tos) {
          if (t == f) continue;
          if (i == 0) return InstructionDecoderSub{f, t};
          --i;
        }
      }
      break;
    }
  }
  throw EmptySpace("fault index out of range");
}

}  // namespace

std::uint64_t space_size(const FaultSpace& space) {
  std::uint64_t n = 0;
  for (auto c : space.classes) n += class_size(space, c);
  return n;
}

std::vector<Fault> sample_faults(Seed seed, const FaultSpace& space,
                                 std::size_t n) {
  if (n == 0) throw ConfigError("sample_faults needs n >= 1");
  const std::uint64_t total = space_size(space);
  if (total == 0) throw EmptySpace("fault space matches no locations");
  Rng rng = make_rng(seed);
  std::vector<Fault> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::uint64_t i = uniform_below(rng, total);
    for (auto c : space.classes) {
      const auto sz = class_size(space, c);
      if (i < sz) {
        Fault f{decode_index(space, c, i), Permanent{0}, 0};
        if (space.transient)
          f.persistence = Transient{uniform_below(rng, space.transient_window)};
        out.push_back(std::move(f));
        break;
      }
      i -= sz;
    }
  }
  return out;
}

std::vector<FaultKind> enumerate_kinds(const FaultSpace& space) {
  std::vector<FaultKind> out;
  for (auto c : space.classes) {
    const auto sz = class_size(space, c);
    for (std::uint64_t i = 0; i < sz; ++i)
      out.push_back(decode_index(space, c, i));
  }
  return out;
}

}  // namespace adaptdiv
