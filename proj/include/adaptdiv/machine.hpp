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
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adaptdiv/faults.hpp"
#include "adaptdiv/types.hpp"

namespace adaptdiv {

inline constexpr Address kDefaultCodeBase = 0x0000;
inline constexpr Address kDefaultDataBase = 0x1000;

enum class Opcode : std::uint8_t {
  LoadI,
  Load,
  Store,
  Add,
  Sub,
  Mul,
  And,
  Or,
  Xor,
  Shl,
  Shr,
  Beq,
  Bne,
  Blt,
  Jmp,
  Halt,
};

std::string_view mnemonic(Opcode op);
std::optional<Opcode> parse_mnemonic(std::string_view text);
bool is_branch(Opcode op);  // Beq, Bne, Blt, Jmp

// Memory operand: `var+offset[index]` or `@address[index]`.
struct MemOperand {
  std::optional<std::string> var;  // empty: absolute address in `offset`
  Word offset = 0;
  std::optional<RegIndex> index;
  bool operator==(const MemOperand&) const = default;
};

struct Instruction {
  Opcode op = Opcode::Halt;
  RegIndex rd = 0, ra = 0, rb = 0;
  Word imm = 0;                   // LOADI; second word of ALU and HALT
  std::optional<MemOperand> mem;  // LOAD / STORE
  std::string target;             // branch label in source form
  std::size_t target_index = 0;   // resolved instruction index
  bool operator==(const Instruction&) const = default;
};

// Which register fields an instruction reads or writes.
struct RegisterUse {
  std::vector<RegIndex> reads;
  std::vector<RegIndex> writes;
};
RegisterUse register_use(const Instruction& ins);

struct Variable {
  std::string name;
  std::size_t size = 1;
  std::vector<Word> init;
  bool operator==(const Variable&) const = default;
};

struct Program {
  std::string name;
  std::vector<Instruction> code;
  std::map<std::string, std::size_t> labels;
  std::vector<Variable> variables;
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::optional<std::string> reexpression;
  std::string source;  // assembly text the program was parsed from
  Address code_base = kDefaultCodeBase;

  // Absolute data placed in memory at load and absolute output cells. Only
  // self-test probes use these; ordinary programs keep them empty.
  std::vector<std::pair<Address, Word>> fixed_data;
  std::vector<Address> fixed_outputs;

  std::optional<std::size_t> variable_index(std::string_view name) const;
  // Registers referenced anywhere in the code, ascending.
  std::vector<RegIndex> used_registers() const;
};

// Parses line-oriented assembly; throws ParseError.
Program parse_program(std::string_view text, std::string name = "");
// Checks the structural invariants; throws ConfigError.
void validate(const Program& program);

struct MemoryLayout {
  Address code_base = kDefaultCodeBase;
  Address data_base = kDefaultDataBase;
  std::vector<std::size_t> variable_order;  // permutation of variable indices
  std::vector<std::size_t> gaps;            // words before each variable
  std::vector<Address> variable_address;    // indexed by variable index
  std::size_t memory_size = kDefaultMemorySize;
  Address data_end = kDefaultDataBase;
  bool operator==(const MemoryLayout&) const = default;
};

struct OpcodeEncoding {
  std::array<OpcodeByte, kOpcodeCount> physical{};
  std::array<std::optional<Opcode>, 256> decode{};

  static OpcodeEncoding identity();
  static OpcodeEncoding from_physical(
      const std::array<OpcodeByte, kOpcodeCount>& bytes);
  OpcodeByte encode(Opcode op) const {
    return physical[static_cast<std::size_t>(op)];
  }
  bool operator==(const OpcodeEncoding&) const = default;
};

struct RegisterMap {
  std::array<RegIndex, kRegisterCount> map{};  // program register -> physical
  std::vector<RegIndex> excluded;
  static RegisterMap identity();
  bool operator==(const RegisterMap&) const = default;
};

struct DiversityConfig;

struct MachineImage {
  std::shared_ptr<const Program> program;
  MemoryLayout layout;
  RegisterMap register_map;
  OpcodeEncoding encoding;
  // Instructions after static transforms, physical registers, resolved
  // targets. NOPs appear as `JMP` to the next instruction.
  std::vector<Instruction> code;
  std::vector<Word> resolved_code;  // two words per instruction
  std::vector<std::pair<Address, Word>> initial_memory;
  std::vector<Address> input_addresses;
  std::vector<Address> output_addresses;
  Address entry = kDefaultCodeBase;
};

// Builds an image; pure in (program, config). Throws LayoutOverflow,
// InfeasibleRegisterAllocation, ConfigError.
MachineImage assemble(const Program& program, const DiversityConfig& config);
MachineImage assemble(const Program& program);

// Recovers logical instructions (physical registers) from resolved_code.
std::vector<Instruction> decode_code(const MachineImage& image);

enum class Status : std::uint8_t { Completed, Crashed, TimedOut };
enum class CrashReason : std::uint8_t { None, InvalidOpcode, OutOfBounds, DivideByZero };

std::string_view to_string(Status s);
std::string_view to_string(CrashReason r);

struct ExecutionOutcome {
  Status status = Status::Completed;
  CrashReason reason = CrashReason::None;
  std::vector<Word> outputs;  // present iff Completed
  Cycle cycles = 0;
  bool operator==(const ExecutionOutcome&) const = default;
};

// Executes one replica. Every register access, address translation, memory
// cell access and opcode decode passes through the plan's fault views.
// Inputs are transferred into the image's input cells through the core's
// data port before the first instruction; outputs are read back through it
// after HALT.
ExecutionOutcome run(const MachineImage& image, std::span<const Word> input,
                     const FaultPlan& plan = {},
                     Cycle cycle_limit = kDefaultCycleLimit);

// Fault-free reference output under the default configuration; cached per
// (program, input). Throws GoldenRunFailed.
std::vector<Word> golden_run(const Program& program, std::span<const Word> input);

}  // namespace adaptdiv
