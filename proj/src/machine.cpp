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

#include "adaptdiv/machine.hpp"

#include <algorithm>
#include <map>
#include <mutex>

#include "adaptdiv/diversity.hpp"

namespace adaptdiv {

namespace {

constexpr unsigned kIndexedBit = 20;

Word encode_word0(OpcodeByte op, const Instruction& ins) {
  const bool indexed = ins.mem && ins.mem->index;
  return Word{op} | (Word{ins.rd} << 8) | (Word{ins.ra} << 12) |
         (Word{ins.rb} << 16) | (Word{indexed} << kIndexedBit);
}

// Per-thread memory reused across runs; only cells that became non-zero are
// cleared between runs.
class Scratch {
 public:
  void reset(std::size_t size) {
    if (cells_.size() != size) {
      cells_.assign(size, 0);
      touched_.clear();
      return;
    }
    for (auto a : touched_) cells_[a] = 0;
    touched_.clear();
  }
  Word get(Address a) const { return cells_[a]; }
  void set(Address a, Word w) {
    if (cells_[a] == 0 && w != 0) touched_.push_back(a);
    cells_[a] = w;
  }

 private:
  std::vector<Word> cells_;
  std::vector<Address> touched_;
};

ExecutionOutcome crashed(CrashReason r, Cycle cycles) {
  return {Status::Crashed, r, {}, cycles};
}

}  // namespace

OpcodeEncoding OpcodeEncoding::identity() {
  std::array<OpcodeByte, kOpcodeCount> b{};
  for (std::size_t i = 0; i < kOpcodeCount; ++i)
    b[i] = static_cast<OpcodeByte>(kIdentityOpcodeBase + i);
  return from_physical(b);
}

OpcodeEncoding OpcodeEncoding::from_physical(
    const std::array<OpcodeByte, kOpcodeCount>& bytes) {
  OpcodeEncoding e;
  e.physical = bytes;
  for (std::size_t i = 0; i < kOpcodeCount; ++i) {
    if (e.decode[bytes[i]]) throw ConfigError("opcode encoding not injective");
    e.decode[bytes[i]] = static_cast<Opcode>(i);
  }
  return e;
}

RegisterMap RegisterMap::identity() {
  RegisterMap m;
  for (std::size_t i = 0; i < kRegisterCount; ++i)
    m.map[i] = static_cast<RegIndex>(i);
  return m;
}

std::string_view to_string(Status s) {
  switch (s) {
    case Status::Completed: return "completed";
    case Status::Crashed: return "crashed";
    case Status::TimedOut: return "timed_out";
  }
  return "?";
}

std::string_view to_string(CrashReason r) {
  switch (r) {
    case CrashReason::None: return "none";
    case CrashReason::InvalidOpcode: return "invalid_opcode";
    case CrashReason::OutOfBounds: return "out_of_bounds";
    case CrashReason::DivideByZero: return "divide_by_zero";
  }
  return "?";
}

MachineImage assemble(const Program& program) {
  return assemble(program, DiversityConfig{});
}

MachineImage assemble(const Program& program, const DiversityConfig& config) {
  validate(program);
  validate(config);
  auto st = apply_static(program, config.static_);
  auto layout = derive_layout(program, config.dynamic);
  const auto msize = layout.memory_size;

  const std::uint64_t code_end =
      std::uint64_t{layout.code_base} + 2 * st.code.size();
  if (code_end > msize) throw LayoutOverflow("code does not fit in memory");
  if (!program.variables.empty() && layout.code_base < layout.data_end &&
      layout.data_base < code_end)
    throw LayoutOverflow("code segment overlaps data segment");

  MachineImage img;
  img.program = std::make_shared<const Program>(program);
  img.register_map = st.register_map;
  img.encoding = st.encoding;
  img.entry = layout.code_base;

  img.resolved_code.reserve(2 * st.code.size());
  for (const auto& ins : st.code) {
    Word w1 = 0;
    switch (ins.op) {
      case Opcode::LoadI:
        w1 = ins.imm;
        break;
      case Opcode::Load:
      case Opcode::Store: {
        const auto& m = *ins.mem;
        if (m.var) {
          w1 = layout.variable_address[*program.variable_index(*m.var)] + m.offset;
        } else {
          w1 = m.offset;
        }
        if (!m.index && w1 >= msize)
          throw LayoutOverflow("absolute address beyond memory");
        break;
      }
      case Opcode::Beq:
      case Opcode::Bne:
      case Opcode::Blt:
      case Opcode::Jmp:
        w1 = layout.code_base + 2 * static_cast<Word>(ins.target_index);
        break;
      case Opcode::Add: case Opcode::Sub: case Opcode::Mul: case Opcode::And:
      case Opcode::Or: case Opcode::Xor: case Opcode::Shl: case Opcode::Shr:
      case Opcode::Halt:
        w1 = ins.imm;  // ignored by execution
        break;
    }
    img.resolved_code.push_back(encode_word0(st.encoding.encode(ins.op), ins));
    img.resolved_code.push_back(w1);
  }
  img.code = std::move(st.code);

  for (std::size_t i = 0; i < img.resolved_code.size(); ++i)
    img.initial_memory.emplace_back(layout.code_base + i, img.resolved_code[i]);
  for (std::size_t v = 0; v < program.variables.size(); ++v) {
    const auto& var = program.variables[v];
    for (std::size_t k = 0; k < var.init.size(); ++k)
      img.initial_memory.emplace_back(layout.variable_address[v] + k, var.init[k]);
  }
  for (auto [a, w] : program.fixed_data) {
    if (a >= msize) throw LayoutOverflow("fixed data beyond memory");
    img.initial_memory.emplace_back(a, w);
  }

  if (program.inputs > 0) {
    const auto base = layout.variable_address[*program.variable_index("in")];
    for (std::size_t i = 0; i < program.inputs; ++i)
      img.input_addresses.push_back(base + i);
  }
  if (!program.fixed_outputs.empty()) {
    img.output_addresses = program.fixed_outputs;
  } else {
    const auto base = layout.variable_address[*program.variable_index("out")];
    for (std::size_t i = 0; i < program.outputs; ++i)
      img.output_addresses.push_back(base + i);
  }
  img.layout = std::move(layout);
  return img;
}

std::vector<Instruction> decode_code(const MachineImage& image) {
  std::vector<Instruction> out;
  const auto base = image.layout.code_base;
  for (std::size_t i = 0; i + 1 < image.resolved_code.size(); i += 2) {
    const Word w0 = image.resolved_code[i], w1 = image.resolved_code[i + 1];
    const auto op = image.encoding.decode[w0 & 0xFF];
    if (!op) throw ConfigError("resolved code holds an unassigned opcode");
    Instruction ins;
    ins.op = *op;
    ins.rd = (w0 >> 8) & 0xF;
    ins.ra = (w0 >> 12) & 0xF;
    ins.rb = (w0 >> 16) & 0xF;
    const bool indexed = (w0 >> kIndexedBit) & 1;
    switch (*op) {
      case Opcode::LoadI:
        ins.imm = w1;
        break;
      case Opcode::Load:
      case Opcode::Store:
        ins.mem = MemOperand{std::nullopt, w1,
                             indexed ? std::optional<RegIndex>(ins.ra) : std::nullopt};
        break;
      case Opcode::Beq:
      case Opcode::Bne:
      case Opcode::Blt:
      case Opcode::Jmp:
        ins.target_index = (w1 - base) / 2;
        break;
      default:
        ins.imm = w1;
        break;
    }
    out.push_back(std::move(ins));
  }
  return out;
}

ExecutionOutcome run(const MachineImage& img, std::span<const Word> input,
                     const FaultPlan& plan, Cycle limit) {
  if (input.size() != img.input_addresses.size())
    throw ConfigError("input length does not match program inputs");
  if (limit == 0) throw ConfigError("cycle limit must be positive");

  const std::size_t msize = img.layout.memory_size;
  thread_local Scratch mem;
  mem.reset(msize);
  const bool faulty = !plan.empty();

  auto translate = [&](Address a, Cycle c, DecoderPort port) -> Address {
    return faulty ? view_address(a, plan, c, msize, port) : a;
  };
  auto mread = [&](Address a, Cycle c) -> Word {
    const Word w = mem.get(a);
    return faulty ? view_memory_read(w, a, plan, c) : w;
  };
  auto mwrite = [&](Address a, Word w, Cycle c) {
    mem.set(a, faulty ? view_memory_write(w, a, plan, c) : w);
  };

  for (auto [a, w] : img.initial_memory) mwrite(a, w, 0);
  for (std::size_t i = 0; i < input.size(); ++i)
    mwrite(translate(img.input_addresses[i], 0, DecoderPort::Data), input[i], 0);

  std::array<Word, kRegisterCount> regs{};
  auto rget = [&](unsigned r, Cycle c) -> Word {
    return faulty ? view_register_read(regs[r], static_cast<RegIndex>(r), plan, c)
                  : regs[r];
  };
  auto rset = [&](unsigned r, Word v, Cycle c) {
    regs[r] = faulty ? view_register_write(v, static_cast<RegIndex>(r), plan, c) : v;
  };

  std::uint64_t pc = img.entry;
  for (Cycle cyc = 0; cyc < limit; ++cyc) {
    if (pc + 1 >= msize) return crashed(CrashReason::OutOfBounds, cyc + 1);
    const Address pa = static_cast<Address>(pc);
    const Word w0 = mread(translate(pa, cyc, DecoderPort::Fetch), cyc);
    const Word w1 = mread(translate(pa + 1, cyc, DecoderPort::Fetch), cyc);
    OpcodeByte byte = static_cast<OpcodeByte>(w0 & 0xFF);
    if (faulty) byte = view_opcode(byte, plan, cyc);
    const auto op = img.encoding.decode[byte];
    if (!op) return crashed(CrashReason::InvalidOpcode, cyc + 1);

    const unsigned rd = (w0 >> 8) & 0xF, ra = (w0 >> 12) & 0xF,
                   rb = (w0 >> 16) & 0xF;
    const bool indexed = (w0 >> kIndexedBit) & 1;
    std::uint64_t next = pc + 2;

    switch (*op) {
      case Opcode::LoadI:
        rset(rd, w1, cyc);
        break;
      case Opcode::Load:
      case Opcode::Store: {
        const Word ea = w1 + (indexed ? rget(ra, cyc) : 0);
        if (ea >= msize) return crashed(CrashReason::OutOfBounds, cyc + 1);
        const Address pa_data = translate(ea, cyc, DecoderPort::Data);
        if (*op == Opcode::Load)
          rset(rd, mread(pa_data, cyc), cyc);
        else
          mwrite(pa_data, rget(rd, cyc), cyc);
        break;
      }
      case Opcode::Add: rset(rd, rget(ra, cyc) + rget(rb, cyc), cyc); break;
      case Opcode::Sub: rset(rd, rget(ra, cyc) - rget(rb, cyc), cyc); break;
      case Opcode::Mul: rset(rd, rget(ra, cyc) * rget(rb, cyc), cyc); break;
      case Opcode::And: rset(rd, rget(ra, cyc) & rget(rb, cyc), cyc); break;
      case Opcode::Or: rset(rd, rget(ra, cyc) | rget(rb, cyc), cyc); break;
      case Opcode::Xor: rset(rd, rget(ra, cyc) ^ rget(rb, cyc), cyc); break;
      case Opcode::Shl: rset(rd, rget(ra, cyc) << (rget(rb, cyc) & 31), cyc); break;
      case Opcode::Shr: rset(rd, rget(ra, cyc) >> (rget(rb, cyc) & 31), cyc); break;
      case Opcode::Beq:
        if (rget(ra, cyc) == rget(rb, cyc)) next = w1;
        break;
      case Opcode::Bne:
        if (rget(ra, cyc) != rget(rb, cyc)) next = w1;
        break;
      case Opcode::Blt:
        if (rget(ra, cyc) < rget(rb, cyc)) next = w1;
        break;
      case Opcode::Jmp:
        next = w1;
        break;
      case Opcode::Halt: {
        ExecutionOutcome out{Status::Completed, CrashReason::None, {}, cyc + 1};
        out.outputs.reserve(img.output_addresses.size());
        for (auto a : img.output_addresses)
          out.outputs.push_back(mread(translate(a, cyc + 1, DecoderPort::Data), cyc + 1));
        return out;
      }
    }
    pc = next;
  }
  return {Status::TimedOut, CrashReason::None, {}, limit};
}

std::vector<Word> golden_run(const Program& program, std::span<const Word> input) {
  using Key = std::pair<std::string, std::vector<Word>>;
  static std::mutex mu;
  static std::map<Key, std::vector<Word>> cache;

  Key key{program.name + '\n' + program.source, {input.begin(), input.end()}};
  const bool cacheable = !program.source.empty();
  if (cacheable) {
    std::lock_guard lock(mu);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  const auto out = run(assemble(program), input);
  if (out.status != Status::Completed)
    throw GoldenRunFailed("fault-free run of " + program.name + " ended " +
                          std::string(to_string(out.status)));
  if (cacheable) {
    std::lock_guard lock(mu);
    cache.emplace(std::move(key), out.outputs);
  }
  return out.outputs;
}

}  // namespace adaptdiv
