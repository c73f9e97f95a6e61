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

#include "adaptdiv/selftest.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <map>
#include <memory>
#include <mutex>
#include <set>

namespace adaptdiv {

namespace {

constexpr std::array<Word, 4> kPatterns{0x00000000, 0xFFFFFFFF, 0xAAAAAAAA, 0x55555555};
constexpr std::array<Address, 4> kSignatureRows{0x5555, 0xAAAA, 0x3333, 0xCCCC};
constexpr unsigned kAddressLines = 16;
constexpr std::size_t kMaxReportedRegisters = 4;
constexpr Cycle kMarchCycleLimit = 4'000'000;

// Opcode probe cells. Outputs are pairwise at Hamming distance >= 2 and the
// replicated cells at distance >= 3 from everything else, so no single
// address line can make two of them collide.
constexpr Address kOut = 0x0300, kOut2 = 0x0500, kOut3 = 0x0600, kOutS = 0x0900;
constexpr Address kTag = 0x3C3C, kDataV = 0x1235;
constexpr Address kDataA = 0x5A00, kDataB = 0x6500, kDataS = 0x7830;
constexpr Word kTagValue = 0x5A5A5A5A, kDataValue = 0x13579BDF;
constexpr Word kSentinel = 0x0C0C0C0C;

struct Operands {
  Word a, b;
};
constexpr std::array<Operands, 3> kRelations{{
    {0x00F0F0F6, 0x7F0F0305},  // a < b
    {0x3C5A0F96, 0x3C5A0F96},  // a == b
    {0x9ABCDEF1, 0x00000003},  // a > b
}};

std::vector<Address> even_parity(Address lo, Address hi) {
  std::vector<Address> v;
  for (Address a = lo; a < hi; ++a)
    if (std::popcount(a) % 2 == 0) v.push_back(a);
  return v;
}

const std::vector<Address>& low_slots() {
  static const auto v = even_parity(0, 0x100);
  return v;
}

const std::vector<Address>& top_slots() {
  static const auto v = even_parity(0xFFE0, 0x10000);
  return v;
}

class ProbeBuilder {
 public:
  ProbeBuilder(std::string name, Address code_base) {
    p_.name = std::move(name);
    p_.code_base = code_base;
  }

  std::size_t here() const { return p_.code.size(); }

  std::size_t emit(Opcode op, RegIndex rd = 0, RegIndex ra = 0, RegIndex rb = 0,
                   Word imm = 0) {
    Instruction ins;
    ins.op = op;
    ins.rd = rd;
    ins.ra = ra;
    ins.rb = rb;
    ins.imm = imm;
    p_.code.push_back(std::move(ins));
    return p_.code.size() - 1;
  }

  std::size_t mem(Opcode op, RegIndex r, Address a, std::optional<RegIndex> index = {},
                  RegIndex ra = 0, RegIndex rb = 0) {
    const auto i = emit(op, r, index.value_or(ra), rb);
    p_.code[i].mem = MemOperand{std::nullopt, a, index};
    return i;
  }

  void target(std::size_t at, std::size_t to) { p_.code[at].target_index = to; }

  void data(Address a, Word w) { p_.fixed_data.emplace_back(a, w); }

  void replicated(Address a, Word w) {
    data(a, w);
    for (unsigned l = 0; l < kAddressLines; ++l) data(a ^ (Address{1} << l), w);
  }

  void output(Address a) { p_.fixed_outputs.push_back(a); }

  Program build() {
    p_.outputs = p_.fixed_outputs.size();
    validate(p_);
    return std::move(p_);
  }

 private:
  Program p_;
};

DiversityConfig probe_config(const CoreContext& core, const std::vector<RegIndex>& avoid) {
  DiversityConfig c;
  c.static_.opcode_encoding_seed = core.encoding_seed;
  std::set<RegIndex> s(avoid.begin(), avoid.end());
  c.static_.excluded_registers.assign(s.begin(), s.end());
  if (c.static_.excluded_registers.size() > kMaxExcludedRegisters)
    c.static_.excluded_registers.resize(kMaxExcludedRegisters);
  return c;
}

std::optional<Word> agreed(const std::vector<Word>& out, std::size_t i) {
  if (out[2 * i] != out[2 * i + 1]) return std::nullopt;
  return out[2 * i];
}

// Explains the four signature loads by a single data-port line fault.
std::optional<AddressDecoderLine> decode_signature(const std::vector<Word>& out) {
  std::array<Word, 4> diff{};
  for (std::size_t i = 0; i < 4; ++i) {
    const auto v = agreed(out, i);
    if (!v) return std::nullopt;
    diff[i] = *v ^ kSignatureRows[i];
  }
  Word mask = 0;
  for (auto d : diff) mask |= d;
  if (mask == 0 || std::popcount(mask) != 1 || mask >= (Word{1} << kAddressLines))
    return std::nullopt;
  const auto line = static_cast<std::uint8_t>(std::countr_zero(mask));
  std::array<bool, 4> moved{}, has_bit{};
  for (std::size_t i = 0; i < 4; ++i) {
    moved[i] = diff[i] != 0;
    has_bit[i] = (kSignatureRows[i] & mask) != 0;
  }
  if (std::all_of(moved.begin(), moved.end(), [](bool b) { return b; }))
    return AddressDecoderLine{line, LineMode::Flip, DecoderPort::Data};
  if (moved == has_bit) return AddressDecoderLine{line, LineMode::Stuck0, DecoderPort::Data};
  std::array<bool, 4> lacks_bit{};
  for (std::size_t i = 0; i < 4; ++i) lacks_bit[i] = !has_bit[i];
  if (moved == lacks_bit) return AddressDecoderLine{line, LineMode::Stuck1, DecoderPort::Data};
  return std::nullopt;
}

void add_unique(std::vector<FaultDefinition>& to, const FaultDefinition& d) {
  if (std::find(to.begin(), to.end(), d) == to.end()) to.push_back(d);
}

// ---- opcode dictionary -------------------------------------------------

using Signature = std::vector<ExecutionOutcome>;

struct Dictionary {
  Signature null_signature;
  std::vector<std::pair<InstructionDecoderSub, Signature>> entries;
};

std::vector<MachineImage> opcode_images(const DiversityConfig& c) {
  std::vector<MachineImage> v;
  for (const auto& p : opcode_probes()) v.push_back(assemble(p, c));
  return v;
}

Signature observe(const std::vector<MachineImage>& images, const FaultPlan& plan) {
  Signature s;
  s.reserve(images.size());
  for (const auto& img : images) s.push_back(run(img, {}, plan, 1000));
  return s;
}

std::shared_ptr<const Dictionary> dictionary_for(const DiversityConfig& c,
                                                 const std::vector<MachineImage>& images) {
  using Key = std::pair<std::array<OpcodeByte, kOpcodeCount>, std::vector<RegIndex>>;
  static std::mutex mu;
  static std::map<Key, std::shared_ptr<const Dictionary>> cache;
  const auto& enc = images.front().encoding;
  Key key{enc.physical, c.static_.excluded_registers};
  {
    std::lock_guard lock(mu);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  auto d = std::make_shared<Dictionary>();
  d->null_signature = observe(images, FaultPlan{});
  OpcodeByte invalid = 0;
  while (enc.decode[invalid]) ++invalid;
  for (auto from : enc.physical) {
    std::vector<OpcodeByte> targets(enc.physical.begin(), enc.physical.end());
    targets.push_back(invalid);
    for (auto to : targets) {
      if (to == from) continue;
      InstructionDecoderSub sub{from, to};
      const FaultPlan plan({Fault{sub, Permanent{0}, 0}});
      d->entries.emplace_back(sub, observe(images, plan));
    }
  }
  std::lock_guard lock(mu);
  return cache.emplace(std::move(key), std::move(d)).first->second;
}

}  // namespace

FaultPlan probe_plan(const FaultPlan& plan) {
  std::vector<Fault> kept;
  for (const auto& f : plan.faults())
    if (std::holds_alternative<Permanent>(f.persistence))
      kept.push_back(Fault{f.kind, Permanent{0}, f.core});
  return FaultPlan(std::move(kept));
}

Program register_walk_probe() {
  ProbeBuilder b(kRegisterWalk, kProbeCodeBase);
  const auto& slots = low_slots();
  std::size_t s = 0;
  for (RegIndex r = 0; r < kRegisterCount; ++r)
    for (auto pat : kPatterns) {
      b.emit(Opcode::LoadI, r, 0, 0, pat);
      b.mem(Opcode::Store, r, slots[s++]);
      b.mem(Opcode::Store, r, slots[s++]);
    }
  b.emit(Opcode::Halt);
  for (std::size_t i = 0; i < s; ++i) b.output(slots[i]);
  return b.build();
}

Program line_signature_probe() {
  ProbeBuilder b("line-signature", kProbeCodeBase);
  const auto& slots = top_slots();
  std::size_t s = 0;
  for (auto row : kSignatureRows) {
    b.mem(Opcode::Load, 1, row);
    b.mem(Opcode::Store, 1, slots[s++]);
    b.mem(Opcode::Store, 1, slots[s++]);
    b.data(row, row);
    for (unsigned l = 0; l < kAddressLines; ++l) {
      const Address n = row ^ (Address{1} << l);
      b.data(n, n);
    }
  }
  b.emit(Opcode::Halt);
  for (std::size_t i = 0; i < s; ++i) b.output(slots[i]);
  return b.build();
}

Program march_probe(MarchRegion region) {
  if (region.lo >= region.hi || region.hi > MarchRegion{}.hi)
    throw ConfigError("march region must be non-empty and below 0x7F00");
  using O = Opcode;
  ProbeBuilder b(kMarch, kMarchCodeBase);
  b.emit(O::LoadI, 0, 0, 0, 0);
  b.emit(O::LoadI, 1, 0, 0, 0xFFFFFFFF);
  b.emit(O::LoadI, 3, 0, 0, region.hi);
  b.emit(O::LoadI, 4, 0, 0, 1);
  b.emit(O::LoadI, 6, 0, 0, 0);
  b.emit(O::LoadI, 10, 0, 0, region.lo);
  b.emit(O::Add, 2, 10, 0);
  // ascending: w0
  const auto w0 = b.mem(O::Store, 0, 0, RegIndex{2});
  b.emit(O::Add, 2, 2, 4);
  b.target(b.emit(O::Blt, 0, 2, 3), w0);
  b.emit(O::Add, 2, 10, 0);
  // ascending: r0, w1
  const auto up = b.mem(O::Load, 5, 0, RegIndex{2});
  const auto beq_up = b.emit(O::Beq, 0, 5, 0);
  const auto bne_up = b.emit(O::Bne, 0, 6, 0);
  b.emit(O::Add, 7, 2, 0);
  b.emit(O::Add, 8, 5, 0);
  b.emit(O::Xor, 9, 5, 0);
  b.target(bne_up, b.emit(O::Add, 6, 6, 4));
  b.target(beq_up, b.mem(O::Store, 1, 0, RegIndex{2}));
  b.emit(O::Add, 2, 2, 4);
  b.target(b.emit(O::Blt, 0, 2, 3), up);
  b.emit(O::Add, 2, 3, 0);
  // descending: r1, w0
  const auto down = b.emit(O::Sub, 2, 2, 4);
  b.mem(O::Load, 5, 0, RegIndex{2});
  const auto beq_down = b.emit(O::Beq, 0, 5, 1);
  const auto bne_down = b.emit(O::Bne, 0, 6, 0);
  b.emit(O::Add, 7, 2, 0);
  b.emit(O::Add, 8, 5, 0);
  b.emit(O::Xor, 9, 5, 1);
  b.target(bne_down, b.emit(O::Add, 6, 6, 4));
  b.target(beq_down, b.mem(O::Store, 0, 0, RegIndex{2}));
  b.target(b.emit(O::Blt, 0, 10, 2), down);
  const auto& slots = top_slots();
  std::size_t s = 0;
  for (RegIndex r : {6, 7, 8, 9}) {
    b.mem(O::Store, r, slots[s++]);
    b.mem(O::Store, r, slots[s++]);
  }
  b.emit(O::Halt);
  for (std::size_t i = 0; i < s; ++i) b.output(slots[i]);
  auto p = b.build();
  if (kMarchCodeBase + 2 * p.code.size() > top_slots().front())
    throw LayoutOverflow("march probe overlaps its result slots");
  return p;
}

// Values r3 may hold after the instruction under test is reinterpreted as
// any other opcode.
std::vector<Word> readout_candidates(Word a, Word b, Word w1, Word at_w1) {
  return {a + b, a - b, a * b, a & b, a | b, a ^ b, a << (b & 31), a >> (b & 31),
          w1, at_w1, 0, kSentinel};
}

std::vector<Program> opcode_probes() {
  using O = Opcode;
  std::vector<Program> out;
  for (std::size_t t = 0; t < kOpcodeCount; ++t) {
    const auto op = static_cast<O>(t);
    for (std::size_t rel = 0; rel < kRelations.size(); ++rel) {
      const auto [a, bval] = kRelations[rel];
      ProbeBuilder b(std::string(mnemonic(op)) + "-" + std::to_string(rel), kProbeCodeBase);
      // The LOADI probe sets up without LOADI so a faulty LOADI is first
      // reached at the instruction under test.
      if (op == O::LoadI) {
        b.mem(O::Load, 1, kDataA);
        b.mem(O::Load, 2, kDataB);
        b.mem(O::Load, 3, kDataS);
        b.replicated(kDataA, a);
        b.replicated(kDataB, bval);
        b.replicated(kDataS, kSentinel);
      } else {
        b.emit(O::LoadI, 1, 0, 0, a);
        b.emit(O::LoadI, 2, 0, 0, bval);
        b.emit(O::LoadI, 3, 0, 0, kSentinel);
      }
      std::size_t test = 0;
      switch (op) {
        case O::LoadI: test = b.emit(O::LoadI, 3, 1, 2, kTag); break;
        case O::Load: test = b.mem(O::Load, 3, kDataV, std::nullopt, 1, 2); break;
        case O::Store: test = b.mem(O::Store, 3, kOutS, std::nullopt, 1, 2); break;
        default: test = b.emit(op, 3, 1, 2, kTag); break;
      }
      if (op != O::LoadI) b.emit(O::LoadI, 4, 0, 0, kOutS);
      // Without working STORE or HALT the outputs are never observed, so the
      // value of r3 is read out as the cycle at which a compare chain exits.
      std::vector<std::size_t> exits;
      if (op == O::Store || op == O::Halt) {
        const Word w1 = op == O::Store ? kOutS : kTag;
        const Word at_w1 = op == O::Store ? 0 : kTagValue;
        for (auto v : readout_candidates(a, bval, w1, at_w1)) {
          b.emit(O::LoadI, 5, 0, 0, v);
          exits.push_back(b.emit(O::Beq, 0, 3, 5));
        }
      }
      const auto tail = b.mem(O::Store, 3, kOut);
      if (is_branch(op)) b.target(test, tail);
      for (auto e : exits) b.target(e, tail);
      b.mem(O::Store, 4, kOut3);
      b.emit(O::Halt, 3, 1, 2, kTag);
      b.mem(O::Store, 3, kOut2);
      b.emit(O::Halt);
      b.replicated(kTag, kTagValue);
      b.replicated(kDataV, kDataValue);
      for (auto o : {kOut, kOut2, kOut3, kOutS, kTag, kDataV}) b.output(o);
      out.push_back(b.build());
    }
  }
  return out;
}

FaultReport register_walk_test(const CoreContext& core) {
  FaultReport rep;
  rep.tests_run.push_back(kRegisterWalk);
  const auto img = assemble(register_walk_probe(), probe_config(core, {}));
  const auto out = run(img, {}, probe_plan(core.plan));
  if (out.status != Status::Completed) {
    rep.probe_crashed.push_back(kRegisterWalk);
    return rep;
  }
  std::vector<FaultDefinition> found;
  std::set<RegIndex> regs;
  for (RegIndex r = 0; r < kRegisterCount; ++r) {
    for (std::uint8_t bit = 0; bit < kWordBits; ++bit) {
      bool mismatch = false;
      int ones = 0, zeros = 0;
      for (std::size_t p = 0; p < kPatterns.size(); ++p) {
        const auto v = agreed(out.outputs, r * kPatterns.size() + p);
        if (!v) continue;
        const int obs = (*v >> bit) & 1, exp = (kPatterns[p] >> bit) & 1;
        mismatch |= obs != exp;
        (obs ? ones : zeros)++;
      }
      if (mismatch && (ones == 0 || zeros == 0)) {
        found.push_back({RegisterStuckBit{r, bit, static_cast<std::uint8_t>(ones ? 1 : 0)},
                         kRegisterWalk});
        regs.insert(r);
      }
    }
  }
  if (regs.size() <= kMaxReportedRegisters) rep.found = std::move(found);
  return rep;
}

FaultReport march_memory_test(const CoreContext& core, MarchRegion region,
                              const std::vector<RegIndex>& avoid) {
  FaultReport rep;
  rep.tests_run.push_back(kMarch);
  const auto cfg = probe_config(core, avoid);
  const auto plan = probe_plan(core.plan);

  const auto sig = run(assemble(line_signature_probe(), cfg), {}, plan);
  if (sig.status != Status::Completed) {
    rep.probe_crashed.push_back("line-signature");
  } else if (auto line = decode_signature(sig.outputs)) {
    rep.found.push_back({*line, kMarch});
    return rep;
  }

  const auto out = run(assemble(march_probe(region), cfg), {}, plan, kMarchCycleLimit);
  if (out.status != Status::Completed) {
    rep.probe_crashed.push_back(kMarch);
    return rep;
  }
  const auto count = agreed(out.outputs, 0), addr = agreed(out.outputs, 1),
             observed = agreed(out.outputs, 2), diff = agreed(out.outputs, 3);
  if (!count || !addr || !observed || !diff) return rep;
  if (*count != 1 || *addr < region.lo || *addr >= region.hi) return rep;
  for (std::uint8_t bit = 0; bit < kWordBits; ++bit)
    if ((*diff >> bit) & 1)
      rep.found.push_back({MemoryStuckBit{*addr, bit,
                                          static_cast<std::uint8_t>((*observed >> bit) & 1)},
                           kMarch});
  return rep;
}

FaultReport opcode_sweep_test(const CoreContext& core, const std::vector<RegIndex>& avoid) {
  FaultReport rep;
  rep.tests_run.push_back(kOpcodeSweep);
  const auto cfg = probe_config(core, avoid);
  const auto images = opcode_images(cfg);
  const auto dict = dictionary_for(cfg, images);
  const auto seen = observe(images, probe_plan(core.plan));
  if (seen == dict->null_signature) return rep;

  std::set<OpcodeByte> froms, tos;
  for (const auto& [sub, s] : dict->entries) {
    if (s != seen) continue;
    froms.insert(sub.from);
    tos.insert(*sub.to);
  }
  if (froms.size() != 1) return rep;
  InstructionDecoderSub found{*froms.begin(), std::nullopt};
  const auto& enc = images.front().encoding;
  if (tos.size() == 1 && enc.decode[*tos.begin()]) found.to = *tos.begin();
  rep.found.push_back({found, kOpcodeSweep});
  return rep;
}

FaultReport run_self_tests(const CoreContext& core) {
  FaultReport rep;
  const auto regs = register_walk_test(core);
  std::set<RegIndex> faulty;
  for (const auto& d : regs.found) faulty.insert(std::get<RegisterStuckBit>(d.kind).reg);
  const std::vector<RegIndex> avoid(faulty.begin(), faulty.end());
  const auto mem = march_memory_test(core, {}, avoid);
  const auto ops = opcode_sweep_test(core, avoid);

  for (const auto* part : {&regs, &mem, &ops}) {
    rep.tests_run.insert(rep.tests_run.end(), part->tests_run.begin(), part->tests_run.end());
    rep.probe_crashed.insert(rep.probe_crashed.end(), part->probe_crashed.begin(),
                             part->probe_crashed.end());
  }
  // A decoder fault corrupts the other probes, so their findings are dropped.
  if (!ops.found.empty()) {
    rep.found = ops.found;
    return rep;
  }
  for (const auto* part : {&regs, &mem})
    for (const auto& d : part->found) add_unique(rep.found, d);
  return rep;
}

}  // namespace adaptdiv
