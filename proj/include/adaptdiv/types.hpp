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

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace adaptdiv {

using Word = std::uint32_t;
using Address = std::uint32_t;
using RegIndex = std::uint8_t;
using OpcodeByte = std::uint8_t;
using CoreIndex = std::uint32_t;
using Cycle = std::uint64_t;
using Seed = std::uint64_t;

inline constexpr std::size_t kRegisterCount = 16;
inline constexpr std::size_t kWordBits = 32;
inline constexpr std::size_t kDefaultMemorySize = 1u << 16;
inline constexpr Cycle kDefaultCycleLimit = 100'000;
// Identity opcode encoding places logical opcode i at byte 0x10 + i.
inline constexpr OpcodeByte kIdentityOpcodeBase = 0x10;
inline constexpr std::size_t kOpcodeCount = 16;

// Error hierarchy. Faulty executions are data (ExecutionOutcome), these are
// reserved for misuse and infeasible requests.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& msg)
      : Error("line " + std::to_string(line) + ": " + msg), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public Error {
  using Error::Error;
};
class LayoutOverflow : public Error {
  using Error::Error;
};
class InfeasibleRegisterAllocation : public Error {
  using Error::Error;
};
class GoldenRunFailed : public Error {
  using Error::Error;
};
class EmptySpace : public Error {
  using Error::Error;
};
class UnknownFamily : public Error {
  using Error::Error;
};
class ScheduleExhausted : public Error {
  using Error::Error;
};
class IoError : public Error {
  using Error::Error;
};

}  // namespace adaptdiv
