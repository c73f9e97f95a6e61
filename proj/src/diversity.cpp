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

#include "adaptdiv/diversity.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <numeric>
#include <set>

#include "adaptdiv/rng.hpp"

namespace adaptdiv {

namespace {

std::string hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%llX", static_cast<unsigned long long>(v));
  return buf;
}

template <class T>
void fisher_yates(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i)
    std::swap(v[i - 1], v[uniform_below(rng, i)]);
}

bool is_block_end(Opcode op) { return is_branch(op) || op == Opcode::Halt; }

Instruction make_nop() {
  Instruction n;
  n.op = Opcode::Jmp;
  return n;
}

// Every field is remapped, including fields the opcode ignores, so no
// excluded register index survives anywhere in the encoded words.
void remap_registers(Instruction& ins, const RegisterMap& m) {
  ins.rd = m.map[ins.rd];
  ins.ra = m.map[ins.ra];
  ins.rb = m.map[ins.rb];
  if (ins.mem && ins.mem->index) ins.mem->index = m.map[*ins.mem->index];
}

// Lehmer decoding of key mod n! into a permutation of 0..n-1.
std::vector<std::size_t> permutation_from_key(Word key, std::size_t n) {
  std::uint64_t fact = 1;
  for (std::size_t i = 2; i <= n; ++i) fact *= i;
  std::uint64_t k = fact ? key % fact : 0;
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  std::vector<std::size_t> perm;
  for (std::size_t i = n; i > 0; --i) {
    fact /= i;
    const auto d = fact ? k / fact : 0;
    k = fact ? k % fact : 0;
    perm.push_back(pool[d]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(d));
  }
  return perm;
}

std::size_t square_side(std::size_t words) {
  std::size_t n = 0;
  while ((n + 1) * (n + 1) <= words) ++n;
  if (n * n != words) throw ConfigError("rowperm needs square matrices");
  return n;
}

std::vector<ReexpressionFamily> build_families() {
  std::vector<ReexpressionFamily> f;
  f.push_back({"bitrotate",
               [](std::span<const Word> in, Word k) {
                 std::vector<Word> out(in.begin(), in.end());
                 for (auto& w : out) w = std::rotl(w, static_cast<int>(k % 32));
                 return out;
               },
               [](std::span<const Word> out, Word, std::size_t) {
                 return std::vector<Word>(out.begin(), out.end());
               }});
  f.push_back({"addconst",
               [](std::span<const Word> in, Word k) {
                 std::vector<Word> out(in.begin(), in.end());
                 for (auto& w : out) w += k;
                 return out;
               },
               [](std::span<const Word> out, Word k, std::size_t n) {
                 std::vector<Word> r(out.begin(), out.end());
                 for (auto& w : r) w -= static_cast<Word>(n) * k;
                 return r;
               }});
  f.push_back({"rowperm",
               [](std::span<const Word> in, Word k) {
                 const auto n = square_side(in.size() / 2);
                 const auto perm = permutation_from_key(k, n);
                 std::vector<Word> out(in.begin(), in.end());
                 for (std::size_t i = 0; i < n; ++i)
                   for (std::size_t j = 0; j < n; ++j)
                     out[i * n + j] = in[perm[i] * n + j];
                 return out;
               },
               [](std::span<const Word> out, Word k, std::size_t n_in) {
                 const auto n = square_side(n_in / 2);
                 const auto perm = permutation_from_key(k, n);
                 std::vector<Word> r(out.begin(), out.end());
                 for (std::size_t i = 0; i < n; ++i)
                   for (std::size_t j = 0; j < n; ++j)
                     r[perm[i] * n + j] = out[i * n + j];
                 return r;
               }});
  f.push_back({"valueoffset",
               [](std::span<const Word> in, Word k) {
                 std::vector<Word> out(in.begin(), in.end());
                 for (auto& w : out) w += k & 0x7FFFFFFFu;
                 return out;
               },
               [](std::span<const Word> out, Word k, std::size_t) {
                 std::vector<Word> r(out.begin(), out.end());
                 for (auto& w : r) w -= k & 0x7FFFFFFFu;
                 return r;
               }});
  return f;
}

const std::vector<ReexpressionFamily>& families() {
  static const auto f = build_families();
  return f;
}

}  // namespace

void validate(const DiversityConfig& config) {
  const auto& ex = config.static_.excluded_registers;
  if (ex.size() > kMaxExcludedRegisters)
    throw ConfigError("at most 4 registers may be excluded");
  for (std::size_t i = 0; i < ex.size(); ++i) {
    if (ex[i] >= kRegisterCount) throw ConfigError("excluded register out of range");
    if (i > 0 && ex[i] <= ex[i - 1])
      throw ConfigError("excluded registers must be sorted and unique");
  }
  if (config.dynamic.reexpr_family) find_family(*config.dynamic.reexpr_family);
}

std::string describe(const DiversityConfig& c) {
  auto opt = [](const auto& o) { return o ? hex(*o) : std::string("-"); };
  std::string ex;
  for (auto r : c.static_.excluded_registers) {
    if (!ex.empty()) ex += ',';
    ex += 'r' + std::to_string(r);
  }
  return "gap=" + std::to_string(c.dynamic.gap_size) +
         ";base=" + hex(c.dynamic.base_offset) +
         ";order=" + opt(c.dynamic.variable_order_seed) +
         ";key=" + opt(c.dynamic.reexpr_key) +
         ";family=" + c.dynamic.reexpr_family.value_or("-") +
         ";excl=" + (ex.empty() ? "-" : ex) +
         ";nops=" + std::to_string(c.static_.nop_count) +
         ";enc=" + opt(c.static_.opcode_encoding_seed);
}

MemoryLayout derive_layout(const Program& program, const DynamicParams& d,
                           std::size_t memory_size) {
  const auto n = program.variables.size();
  MemoryLayout l;
  l.memory_size = memory_size;
  l.code_base = program.code_base;
  l.data_base = kDefaultDataBase + d.base_offset;
  l.variable_order.resize(n);
  std::iota(l.variable_order.begin(), l.variable_order.end(), 0);
  if (d.variable_order_seed) {
    Rng rng = make_rng(*d.variable_order_seed);
    fisher_yates(l.variable_order, rng);
  }
  l.gaps.assign(n, d.gap_size);
  l.variable_address.assign(n, 0);
  std::uint64_t addr = l.data_base;
  for (auto v : l.variable_order) {
    addr += d.gap_size;
    l.variable_address[v] = static_cast<Address>(addr);
    addr += program.variables[v].size;
  }
  if (addr > memory_size) throw LayoutOverflow("data segment exceeds memory");
  l.data_end = static_cast<Address>(addr);
  return l;
}

RegisterMap allocate_registers(const Program& program,
                               std::span<const RegIndex> excluded) {
  const auto used = program.used_registers();
  if (used.size() + excluded.size() > kRegisterCount)
    throw InfeasibleRegisterAllocation(
        std::to_string(used.size()) + " live registers with " +
        std::to_string(excluded.size()) + " excluded");
  const std::set<RegIndex> ex(excluded.begin(), excluded.end());
  const std::set<RegIndex> in_use(used.begin(), used.end());
  std::vector<RegIndex> free;
  for (RegIndex r = 0; r < kRegisterCount; ++r)
    if (!ex.count(r) && !in_use.count(r)) free.push_back(r);
  RegisterMap m = RegisterMap::identity();
  m.excluded.assign(excluded.begin(), excluded.end());
  std::size_t next = 0;
  for (auto r : used)
    if (ex.count(r)) m.map[r] = free[next++];
  // Unused excluded registers only ever appear in ignored fields.
  RegIndex spare = 0;
  while (ex.count(spare)) ++spare;
  for (auto r : excluded)
    if (!in_use.count(r)) m.map[r] = spare;
  return m;
}

OpcodeEncoding encoding_from_seed(std::optional<Seed> seed) {
  if (!seed) return OpcodeEncoding::identity();
  std::vector<OpcodeByte> bytes;
  for (int b = 1; b < 256; ++b) bytes.push_back(static_cast<OpcodeByte>(b));
  Rng rng = make_rng(*seed);
  fisher_yates(bytes, rng);
  std::array<OpcodeByte, kOpcodeCount> phys{};
  std::copy_n(bytes.begin(), kOpcodeCount, phys.begin());
  return OpcodeEncoding::from_physical(phys);
}

StaticTransform apply_static(const Program& program, const StaticParams& p) {
  StaticTransform st;
  st.register_map = allocate_registers(program, p.excluded_registers);
  st.encoding = encoding_from_seed(p.opcode_encoding_seed);

  const auto n = program.code.size();
  std::vector<bool> head(n, false);
  if (n > 0) head[0] = true;
  for (const auto& [label, idx] : program.labels)
    if (idx < n) head[idx] = true;
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (is_block_end(program.code[i].op)) head[i + 1] = true;

  // New index of the first word emitted for each old instruction.
  std::vector<std::size_t> start(n + 1, 0);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    start[i] = pos;
    pos += 1 + (head[i] ? p.nop_count : 0);
  }
  start[n] = pos;

  st.code.reserve(pos);
  for (std::size_t i = 0; i < n; ++i) {
    if (head[i]) {
      for (std::uint32_t k = 0; k < p.nop_count; ++k) {
        auto nop = make_nop();
        nop.target_index = st.code.size() + 1;
        st.code.push_back(std::move(nop));
      }
    }
    Instruction ins = program.code[i];
    remap_registers(ins, st.register_map);
    if (is_branch(ins.op)) ins.target_index = start[ins.target_index];
    st.code.push_back(std::move(ins));
  }
  return st;
}

const ReexpressionFamily& find_family(std::string_view name) {
  for (const auto& f : families())
    if (f.name == name) return f;
  throw UnknownFamily("unknown re-expression family: " + std::string(name));
}

std::vector<std::string> family_names() {
  std::vector<std::string> v;
  for (const auto& f : families()) v.push_back(f.name);
  return v;
}

std::vector<Word> reexpress(std::span<const Word> input, Word key,
                            std::string_view family) {
  return find_family(family).forward(input, key);
}

std::vector<Word> invert_reexpress(std::span<const Word> output, Word key,
                                   std::string_view family,
                                   std::size_t input_count) {
  return find_family(family).inverse(output, key, input_count);
}

std::optional<std::string> effective_family(const Program& program,
                                            const DiversityConfig& config) {
  if (config.dynamic.reexpr_family) return config.dynamic.reexpr_family;
  return program.reexpression;
}

std::optional<std::vector<Word>> run_canonical(
    const MachineImage& image, const DiversityConfig& config,
    std::span<const Word> input, const FaultPlan& plan, Cycle limit,
    ExecutionOutcome* raw) {
  const auto family = effective_family(*image.program, config);
  const bool transform = family && config.dynamic.reexpr_key;
  ExecutionOutcome out;
  if (transform) {
    const auto in2 = reexpress(input, *config.dynamic.reexpr_key, *family);
    out = run(image, in2, plan, limit);
  } else {
    out = run(image, input, plan, limit);
  }
  if (raw) *raw = out;
  if (out.status != Status::Completed) return std::nullopt;
  if (!transform) return std::move(out.outputs);
  return invert_reexpress(out.outputs, *config.dynamic.reexpr_key, *family,
                          input.size());
}

DiversityConfig random_config(Seed seed, const Program& program,
                              bool include_static) {
  Rng rng = make_rng(seed);
  DiversityConfig c;
  c.dynamic.gap_size = static_cast<std::uint32_t>(uniform_below(rng, 17));
  c.dynamic.base_offset = static_cast<std::uint32_t>(uniform_below(rng, kMaxBaseOffset));
  if (uniform_below(rng, 2)) c.dynamic.variable_order_seed = rng();
  if (program.reexpression) c.dynamic.reexpr_key = static_cast<Word>(rng());
  if (include_static) {
    const auto used = program.used_registers().size();
    const auto room = std::min<std::size_t>(kMaxExcludedRegisters,
                                            kRegisterCount - std::min(used, kRegisterCount));
    const auto k = uniform_below(rng, room + 1);
    std::vector<RegIndex> regs(kRegisterCount);
    std::iota(regs.begin(), regs.end(), 0);
    fisher_yates(regs, rng);
    c.static_.excluded_registers.assign(regs.begin(), regs.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(c.static_.excluded_registers.begin(), c.static_.excluded_registers.end());
    c.static_.nop_count = static_cast<std::uint32_t>(uniform_below(rng, 4));
    if (uniform_below(rng, 2)) c.static_.opcode_encoding_seed = rng();
  }
  return c;
}

}  // namespace adaptdiv
