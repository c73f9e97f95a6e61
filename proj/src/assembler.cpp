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

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>

#include "adaptdiv/machine.hpp"

namespace adaptdiv {

namespace {

constexpr std::array<std::string_view, kOpcodeCount> kMnemonics = {
    "LOADI", "LOAD", "STORE", "ADD", "SUB", "MUL", "AND", "OR",
    "XOR",   "SHL",  "SHR",   "BEQ", "BNE", "BLT", "JMP", "HALT"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

std::vector<std::string_view> words(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

bool is_ident(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_'))
    return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
  });
}

class LineParser {
 public:
  explicit LineParser(std::size_t line) : line_(line) {}

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(line_, msg);
  }

  std::uint64_t number(std::string_view s) const {
    s = trim(s);
    int base = 10;
    if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
      base = 16;
      s.remove_prefix(2);
    }
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
    if (ec != std::errc{} || p != s.data() + s.size() || s.empty())
      fail("bad number '" + std::string(s) + "'");
    return v;
  }

  Word word(std::string_view s) const {
    const auto v = number(s);
    if (v > 0xFFFFFFFFull) fail("value exceeds 32 bits");
    return static_cast<Word>(v);
  }

  RegIndex reg(std::string_view s) const {
    s = trim(s);
    if (s.size() < 2 || (s[0] != 'r' && s[0] != 'R'))
      fail("expected register, got '" + std::string(s) + "'");
    const auto v = number(s.substr(1));
    if (v >= kRegisterCount) fail("register index out of range");
    return static_cast<RegIndex>(v);
  }

  MemOperand mem(std::string_view s) const {
    s = trim(s);
    MemOperand m;
    if (auto lb = s.find('['); lb != std::string_view::npos) {
      if (s.back() != ']') fail("unterminated index");
      m.index = reg(s.substr(lb + 1, s.size() - lb - 2));
      s = trim(s.substr(0, lb));
    }
    if (!s.empty() && s[0] == '@') {
      m.offset = word(s.substr(1));
      return m;
    }
    std::string_view name = s;
    if (auto plus = s.find('+'); plus != std::string_view::npos) {
      name = trim(s.substr(0, plus));
      m.offset = word(s.substr(plus + 1));
    }
    if (!is_ident(name)) fail("bad memory operand '" + std::string(s) + "'");
    m.var = std::string(name);
    return m;
  }

 private:
  std::size_t line_;
};

void expect_count(const LineParser& lp, const std::vector<std::string_view>& ops,
                  std::size_t n, std::string_view mn) {
  if (ops.size() != n || (n > 0 && ops.back().empty()))
    lp.fail(std::string(mn) + " takes " + std::to_string(n) + " operand(s)");
}

}  // namespace

std::string_view mnemonic(Opcode op) {
  return kMnemonics[static_cast<std::size_t>(op)];
}

std::optional<Opcode> parse_mnemonic(std::string_view text) {
  const auto u = upper(text);
  for (std::size_t i = 0; i < kMnemonics.size(); ++i)
    if (kMnemonics[i] == u) return static_cast<Opcode>(i);
  return std::nullopt;
}

bool is_branch(Opcode op) {
  return op == Opcode::Beq || op == Opcode::Bne || op == Opcode::Blt ||
         op == Opcode::Jmp;
}

RegisterUse register_use(const Instruction& ins) {
  RegisterUse u;
  switch (ins.op) {
    case Opcode::LoadI:
      u.writes = {ins.rd};
      break;
    case Opcode::Load:
      u.writes = {ins.rd};
      if (ins.mem && ins.mem->index) u.reads = {ins.ra};
      break;
    case Opcode::Store:
      u.reads = {ins.rd};
      if (ins.mem && ins.mem->index) u.reads.push_back(ins.ra);
      break;
    case Opcode::Add:
    case Opcode::Sub:
    case Opcode::Mul:
    case Opcode::And:
    case Opcode::Or:
    case Opcode::Xor:
    case Opcode::Shl:
    case Opcode::Shr:
      u.writes = {ins.rd};
      u.reads = {ins.ra, ins.rb};
      break;
    case Opcode::Beq:
    case Opcode::Bne:
    case Opcode::Blt:
      u.reads = {ins.ra, ins.rb};
      break;
    case Opcode::Jmp:
    case Opcode::Halt:
      break;
  }
  return u;
}

std::optional<std::size_t> Program::variable_index(std::string_view n) const {
  for (std::size_t i = 0; i < variables.size(); ++i)
    if (variables[i].name == n) return i;
  return std::nullopt;
}

std::vector<RegIndex> Program::used_registers() const {
  std::set<RegIndex> s;
  for (const auto& ins : code) {
    auto u = register_use(ins);
    s.insert(u.reads.begin(), u.reads.end());
    s.insert(u.writes.begin(), u.writes.end());
  }
  return {s.begin(), s.end()};
}

Program parse_program(std::string_view text, std::string name) {
  Program p;
  p.name = std::move(name);
  p.source = std::string(text);
  std::vector<std::pair<std::size_t, std::size_t>> target_lines;  // ins, line

  std::size_t line_no = 0;
  for (auto raw : split(text, '\n')) {
    ++line_no;
    LineParser lp(line_no);
    std::string_view line = raw;
    if (auto c = line.find(';'); c != std::string_view::npos)
      line = line.substr(0, c);
    line = trim(line);

    while (true) {
      auto colon = line.find(':');
      if (colon == std::string_view::npos) break;
      auto label = trim(line.substr(0, colon));
      if (!is_ident(label)) break;
      if (!p.labels.emplace(std::string(label), p.code.size()).second)
        lp.fail("duplicate label '" + std::string(label) + "'");
      line = trim(line.substr(colon + 1));
    }
    if (line.empty()) continue;

    if (line[0] == '.') {
      auto w = words(line);
      const auto dir = w[0];
      auto add_var = [&](std::string_view vname, std::size_t size,
                         std::vector<Word> init) {
        if (!is_ident(vname)) lp.fail("bad variable name");
        if (p.variable_index(vname)) lp.fail("duplicate variable '" + std::string(vname) + "'");
        if (size == 0) lp.fail("variable size must be >= 1");
        if (init.size() > size) lp.fail("too many initializers");
        p.variables.push_back({std::string(vname), size, std::move(init)});
      };
      if (dir == ".var") {
        if (w.size() < 3) lp.fail(".var name size [init...]");
        std::vector<Word> init;
        for (std::size_t i = 3; i < w.size(); ++i) init.push_back(lp.word(w[i]));
        add_var(w[1], lp.number(w[2]), std::move(init));
      } else if (dir == ".in" || dir == ".out") {
        if (w.size() != 2) lp.fail(std::string(dir) + " n");
        const auto n = lp.number(w[1]);
        if (dir == ".in") {
          p.inputs = n;
          if (n > 0) add_var("in", n, {});
        } else {
          p.outputs = n;
          if (n > 0) add_var("out", n, {});
        }
      } else if (dir == ".reexpr") {
        if (w.size() != 2) lp.fail(".reexpr family");
        p.reexpression = std::string(w[1]);
      } else if (dir == ".name") {
        if (w.size() != 2) lp.fail(".name ident");
        p.name = std::string(w[1]);
      } else {
        lp.fail("unknown directive " + std::string(dir));
      }
      continue;
    }

    std::size_t sp = 0;
    while (sp < line.size() && !std::isspace(static_cast<unsigned char>(line[sp]))) ++sp;
    const auto mn = line.substr(0, sp);
    const auto op = parse_mnemonic(mn);
    if (!op) lp.fail("unknown mnemonic '" + std::string(mn) + "'");
    const auto rest = trim(line.substr(sp));
    auto ops = rest.empty() ? std::vector<std::string_view>{} : split(rest, ',');

    Instruction ins;
    ins.op = *op;
    switch (*op) {
      case Opcode::LoadI:
        expect_count(lp, ops, 2, mn);
        ins.rd = lp.reg(ops[0]);
        ins.imm = lp.word(ops[1]);
        break;
      case Opcode::Load:
      case Opcode::Store:
        expect_count(lp, ops, 2, mn);
        ins.rd = lp.reg(ops[0]);
        ins.mem = lp.mem(ops[1]);
        if (ins.mem->index) ins.ra = *ins.mem->index;
        break;
      case Opcode::Beq:
      case Opcode::Bne:
      case Opcode::Blt:
        expect_count(lp, ops, 3, mn);
        ins.ra = lp.reg(ops[0]);
        ins.rb = lp.reg(ops[1]);
        ins.target = std::string(ops[2]);
        target_lines.emplace_back(p.code.size(), line_no);
        break;
      case Opcode::Jmp:
        expect_count(lp, ops, 1, mn);
        ins.target = std::string(ops[0]);
        target_lines.emplace_back(p.code.size(), line_no);
        break;
      case Opcode::Halt:
        expect_count(lp, ops, 0, mn);
        break;
      default:
        expect_count(lp, ops, 3, mn);
        ins.rd = lp.reg(ops[0]);
        ins.ra = lp.reg(ops[1]);
        ins.rb = lp.reg(ops[2]);
        break;
    }
    p.code.push_back(std::move(ins));
  }

  for (auto [idx, ln] : target_lines) {
    auto& ins = p.code[idx];
    auto it = p.labels.find(ins.target);
    if (it == p.labels.end())
      throw ParseError(ln, "undefined label '" + ins.target + "'");
    ins.target_index = it->second;
  }
  for (const auto& ins : p.code)
    if (ins.mem && ins.mem->var && !p.variable_index(*ins.mem->var))
      throw ParseError(0, "undeclared variable '" + *ins.mem->var + "'");
  return p;
}

void validate(const Program& p) {
  if (p.code.empty()) throw ConfigError("program has no code");
  if (p.outputs < 1) throw ConfigError("program declares no outputs");
  std::set<std::string> names;
  for (const auto& v : p.variables) {
    if (!names.insert(v.name).second)
      throw ConfigError("duplicate variable " + v.name);
    if (v.size == 0 || v.init.size() > v.size)
      throw ConfigError("bad variable " + v.name);
  }
  if (p.fixed_outputs.empty()) {
    auto out = p.variable_index("out");
    if (!out || p.variables[*out].size != p.outputs)
      throw ConfigError("output variable does not match .out");
  } else if (p.fixed_outputs.size() != p.outputs) {
    throw ConfigError("fixed outputs do not match .out");
  }
  if (p.inputs > 0) {
    auto in = p.variable_index("in");
    if (!in || p.variables[*in].size != p.inputs)
      throw ConfigError("input variable does not match .in");
  }
  for (const auto& ins : p.code) {
    if (is_branch(ins.op) && ins.target_index >= p.code.size())
      throw ConfigError("branch target out of range");
    if ((ins.op == Opcode::Load || ins.op == Opcode::Store) && !ins.mem)
      throw ConfigError("memory instruction without operand");
    if (ins.mem && ins.mem->var) {
      auto vi = p.variable_index(*ins.mem->var);
      if (!vi) throw ConfigError("undeclared variable " + *ins.mem->var);
      if (!ins.mem->index && ins.mem->offset >= p.variables[*vi].size)
        throw ConfigError("constant offset beyond variable " + *ins.mem->var);
    }
  }
}

}  // namespace adaptdiv
