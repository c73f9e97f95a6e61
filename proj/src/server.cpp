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

#include "adaptdiv/server.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <omp.h>

#include "adaptdiv/benchmarks.hpp"

namespace adaptdiv {

namespace {

constexpr std::uint64_t kTailSalt = 0x7a11;
constexpr std::uint32_t kMaxRecordBytes = 64u << 20;

struct Span {
  Address lo, hi;  // [lo, hi)
};

bool overlaps(Span a, Span b) { return a.lo < b.hi && b.lo < a.hi; }

Span code_span(const Program& p, std::uint32_t nops = 0) {
  // Upper bound: every instruction may start a block and receive NOPs.
  const auto words = 2 * p.code.size() * (1 + nops);
  return {p.code_base, static_cast<Address>(p.code_base + words)};
}

// Data cells of the layout and whether each is initialized at load.
std::vector<std::pair<Address, bool>> data_cells(const Program& p, const MemoryLayout& l) {
  std::vector<std::pair<Address, bool>> out;
  for (std::size_t v = 0; v < p.variables.size(); ++v) {
    const auto& var = p.variables[v];
    for (std::size_t k = 0; k < var.size; ++k)
      out.emplace_back(static_cast<Address>(l.variable_address[v] + k), k < var.init.size());
  }
  return out;
}

// Layout under which the decoder line cannot corrupt the program's data:
// remapped cells stay distinct, in bounds, off the code, and initialized
// cells are not moved.
bool line_safe(const Program& p, const MemoryLayout& l, const AddressDecoderLine& f) {
  if (f.port == DecoderPort::Fetch) return false;
  const auto code = code_span(p);
  std::vector<Address> mapped;
  for (auto [a, init] : data_cells(p, l)) {
    const auto m = apply_line(a, f);
    if (m >= l.memory_size || overlaps({m, m + 1}, code)) return false;
    if (init && m != a) return false;
    mapped.push_back(m);
  }
  std::sort(mapped.begin(), mapped.end());
  return std::adjacent_find(mapped.begin(), mapped.end()) == mapped.end();
}

bool cell_safe(const Program& p, const MemoryLayout& l, Address addr) {
  for (auto [a, init] : data_cells(p, l))
    if (a == addr) return false;
  return true;
}

std::optional<MemoryLayout> try_layout(const Program& p, const DynamicParams& d) {
  try {
    return derive_layout(p, d);
  } catch (const Error&) {
    return std::nullopt;
  }
}

class CandidateList {
 public:
  explicit CandidateList(std::size_t budget) : budget_(budget) {}

  bool full() const { return out_.size() >= budget_; }

  void add(Technique t, const DiversityConfig& c) {
    if (full()) return;
    if (std::any_of(out_.begin(), out_.end(), [&](const auto& x) { return x.config == c; }))
      return;
    out_.push_back({t, c});
  }

  std::vector<Candidate> take() { return std::move(out_); }

 private:
  std::size_t budget_;
  std::vector<Candidate> out_;
};

std::vector<std::uint32_t> base_offsets(
    const Program& p, std::uint32_t gap, std::size_t want,
    const std::function<bool(const MemoryLayout&)>& good) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t o = 1; o < kMaxBaseOffset && out.size() < want; ++o) {
    DynamicParams d;
    d.gap_size = gap;
    d.base_offset = o;
    if (auto l = try_layout(p, d); l && good(*l)) out.push_back(o);
  }
  return out;
}

void add_gaps(CandidateList& list, const Program& p, std::initializer_list<std::uint32_t> gaps) {
  for (auto g : gaps) {
    DiversityConfig c;
    c.dynamic.gap_size = g;
    if (try_layout(p, c.dynamic)) list.add(Technique::MemoryGaps, c);
  }
}

void add_orders(CandidateList& list, Seed seed, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    DiversityConfig c;
    c.dynamic.variable_order_seed = derive_seed(seed, {0x0de7, i});
    list.add(Technique::LayoutRandomization, c);
  }
}

void add_keys(CandidateList& list, const Program& p, Seed seed, std::size_t n) {
  if (!p.reexpression) return;
  for (std::size_t i = 0; i < n; ++i) {
    DiversityConfig c;
    Rng rng = make_rng(derive_seed(seed, {0x4e75, i}));
    c.dynamic.reexpr_key = static_cast<Word>(1 + uniform_below(rng, 0xFFFFFFFEu));
    list.add(Technique::DataRandomization, c);
  }
}

void add_guided(CandidateList& list, const Program& p, const FaultKind& fault, Seed seed) {
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, RegisterStuckBit>) {
          DiversityConfig c;
          c.static_.excluded_registers = {f.reg};
          list.add(Technique::RegisterExclusion, c);
          add_keys(list, p, seed, 4);
        } else if constexpr (std::is_same_v<T, MemoryStuckBit>) {
          auto good = [&](const MemoryLayout& l) { return cell_safe(p, l, f.addr); };
          add_gaps(list, p, {1, 2, 4, 8, 16});
          for (auto o : base_offsets(p, 0, 4, good)) {
            DiversityConfig c;
            c.dynamic.base_offset = o;
            list.add(Technique::BaseAddress, c);
          }
          add_orders(list, seed, 4);
          add_keys(list, p, seed, 4);
          for (std::uint32_t n = 1; n <= 8; ++n) {
            DiversityConfig c;
            c.static_.nop_count = n;
            list.add(Technique::NopInsertion, c);
          }
        } else if constexpr (std::is_same_v<T, AddressDecoderLine>) {
          auto good = [&](const MemoryLayout& l) { return line_safe(p, l, f); };
          for (auto o : base_offsets(p, 0, 6, good)) {
            DiversityConfig c;
            c.dynamic.base_offset = o;
            list.add(Technique::BaseAddress, c);
          }
          add_gaps(list, p, {1, 2, 4, 8, 16, 32, 64, 128});
          for (std::uint32_t g : {1u, 2u, 4u, 8u, 16u, 32u}) {
            for (auto o : base_offsets(p, g, 1, good)) {
              DiversityConfig c;
              c.dynamic.gap_size = g;
              c.dynamic.base_offset = o;
              list.add(Technique::MemoryGaps, c);
            }
          }
          add_orders(list, seed, 6);
        } else {
          for (std::uint64_t i = 0, found = 0; i < 4096 && found < 8; ++i) {
            DiversityConfig c;
            c.static_.opcode_encoding_seed = derive_seed(seed, {0xe2c0, i});
            const auto enc = encoding_from_seed(c.static_.opcode_encoding_seed);
            if (std::find(enc.physical.begin(), enc.physical.end(), f.from) !=
                enc.physical.end())
              continue;
            list.add(Technique::EncodingRandomization, c);
            ++found;
          }
        }
      },
      fault);
}

std::vector<FaultPlan> fault_instances(const FaultKind& fault, const OpcodeEncoding& enc) {
  const auto* sub = std::get_if<InstructionDecoderSub>(&fault);
  if (!sub || sub->to) return {FaultPlan({Fault{fault, Permanent{0}, 0}})};
  std::vector<FaultPlan> out;
  for (auto b : enc.physical)
    if (b != sub->from)
      out.push_back(FaultPlan({Fault{InstructionDecoderSub{sub->from, b}, Permanent{0}, 0}}));
  for (unsigned b = 0; b < 256; ++b) {
    if (!enc.decode[b] && b != sub->from) {
      out.push_back(FaultPlan({Fault{InstructionDecoderSub{sub->from,
                                                           static_cast<OpcodeByte>(b)},
                                     Permanent{0}, 0}}));
      break;
    }
  }
  return out;
}

double coverage_impl(const Program& program, const DiversityConfig& config,
                     const FaultKind& fault, const std::vector<std::vector<Word>>& inputs,
                     bool parallel) {
  if (inputs.empty()) throw ConfigError("coverage needs at least one test input");
  const auto image = assemble(program, config);
  std::vector<std::vector<Word>> golden;
  golden.reserve(inputs.size());
  for (const auto& in : inputs) golden.push_back(golden_run(program, in));
  const auto n = static_cast<std::int64_t>(inputs.size());
  std::int64_t worst = n;
  for (const auto& plan : fault_instances(fault, image.encoding)) {
    std::int64_t masked = 0;
#pragma omp parallel for schedule(dynamic) reduction(+ : masked) if (parallel)
    for (std::int64_t i = 0; i < n; ++i) {
      const auto out = run_canonical(image, config, inputs[i], plan);
      if (out && *out == golden[i]) ++masked;
    }
    worst = std::min(worst, masked);
  }
  return static_cast<double>(worst) / static_cast<double>(n);
}

double evaluate(const VariantRequest& r, const DiversityConfig& c, bool parallel) {
  try {
    return coverage_impl(r.program, c, r.fault.kind, r.test_inputs, parallel);
  } catch (const Error&) {
    return 0.0;
  }
}

Technique parse_technique(const std::string& s) {
  for (std::uint8_t t = 0; t <= static_cast<std::uint8_t>(Technique::RandomCombination); ++t)
    if (to_string(static_cast<Technique>(t)) == s) return static_cast<Technique>(t);
  throw ConfigError("unknown technique '" + s + "'");
}

// Socket helpers.
void write_all(int fd, const void* data, std::size_t n) {
  const auto* p = static_cast<const char*>(data);
  while (n > 0) {
    const auto k = ::send(fd, p, n, MSG_NOSIGNAL);
    if (k < 0 && errno == EINTR) continue;
    if (k <= 0) throw IoError(std::string("socket write failed: ") + std::strerror(errno));
    p += k;
    n -= static_cast<std::size_t>(k);
  }
}

bool read_all(int fd, void* data, std::size_t n) {
  auto* p = static_cast<char*>(data);
  std::size_t got = 0;
  while (got < n) {
    const auto k = ::recv(fd, p + got, n - got, 0);
    if (k < 0 && errno == EINTR) continue;
    if (k < 0) throw IoError(std::string("socket read failed: ") + std::strerror(errno));
    if (k == 0) {
      if (got == 0) return false;
      throw IoError("connection closed mid-record");
    }
    got += static_cast<std::size_t>(k);
  }
  return true;
}

void send_record(int fd, const std::string& body) {
  if (body.size() > kMaxRecordBytes) throw IoError("record too large");
  const std::uint32_t len = htonl(static_cast<std::uint32_t>(body.size()));
  write_all(fd, &len, 4);
  write_all(fd, body.data(), body.size());
}

std::optional<std::string> receive_record(int fd) {
  std::uint32_t len = 0;
  if (!read_all(fd, &len, 4)) return std::nullopt;
  len = ntohl(len);
  if (len > kMaxRecordBytes) throw IoError("record too large");
  std::string body(len, '\0');
  if (len > 0 && !read_all(fd, body.data(), len)) throw IoError("connection closed mid-record");
  return body;
}

struct Fd {
  int fd;
  ~Fd() {
    if (fd >= 0) ::close(fd);
  }
};

}  // namespace

Json program_to_json(const Program& p) {
  Json j;
  try {
    const auto& b = find_benchmark(p.name);
    if (b.program.source == p.source) {
      j["program"] = p.name;
      return j;
    }
  } catch (const ConfigError&) {
  }
  j["program_name"] = p.name;
  j["program_text"] = p.source;
  return j;
}

Program program_from_json(const Json& j) {
  if (j.contains("program")) return find_benchmark(j.at("program").get<std::string>()).program;
  if (!j.contains("program_text")) throw ConfigError("missing field 'program' or 'program_text'");
  return parse_program(j.at("program_text").get<std::string>(),
                       j.value("program_name", std::string("inline")));
}

std::string_view to_string(Technique t) {
  switch (t) {
    case Technique::RegisterExclusion: return "register_exclusion";
    case Technique::DataRandomization: return "data_randomization";
    case Technique::MemoryGaps: return "memory_gaps";
    case Technique::BaseAddress: return "base_address";
    case Technique::LayoutRandomization: return "layout_randomization";
    case Technique::NopInsertion: return "nop_insertion";
    case Technique::EncodingRandomization: return "encoding_randomization";
    case Technique::RandomCombination: return "random_combination";
  }
  return "?";
}

void VariantRequest::validate() const {
  adaptdiv::validate(program);
  if (test_inputs.empty()) throw ConfigError("test_inputs must be non-empty");
  if (!(coverage_threshold > 0.0 && coverage_threshold <= 1.0))
    throw ConfigError("coverage_threshold must lie in (0, 1]");
  if (search_budget == 0) throw ConfigError("search_budget must be positive");
  for (const auto& in : test_inputs)
    if (in.size() != program.inputs)
      throw ConfigError("test input has " + std::to_string(in.size()) + " words, program takes " +
                        std::to_string(program.inputs));
}

double estimate_masking_coverage(const Program& program, const DiversityConfig& config,
                                 const FaultKind& fault,
                                 const std::vector<std::vector<Word>>& test_inputs) {
  return coverage_impl(program, config, fault, test_inputs, true);
}

double estimate_masking_coverage_serial(const Program& program,
                                        const DiversityConfig& config,
                                        const FaultKind& fault,
                                        const std::vector<std::vector<Word>>& test_inputs) {
  return coverage_impl(program, config, fault, test_inputs, false);
}

std::vector<Candidate> variant_candidates(const Program& program, const FaultKind& fault,
                                          Seed seed, std::size_t budget) {
  CandidateList list(budget);
  add_guided(list, program, fault, seed);
  for (std::uint64_t i = 0; !list.full() && i < 8 * budget; ++i) {
    auto c = random_config(derive_seed(seed, {kTailSalt, i}), program, true);
    try {
      assemble(program, c);
    } catch (const Error&) {
      continue;
    }
    list.add(Technique::RandomCombination, c);
  }
  return list.take();
}

VariantResponse generate_variant(const VariantRequest& request) {
  request.validate();
  const auto cands =
      variant_candidates(request.program, request.fault.kind, request.seed, request.search_budget);
  for (const auto& in : request.test_inputs) golden_run(request.program, in);

  double best = 0.0;
  std::size_t i = 0;
  while (i < cands.size()) {
    // Head candidate: inputs spread over threads. Later ones: parallel batches.
    const std::size_t chunk =
        i == 0 ? 1 : static_cast<std::size_t>(std::max(1, omp_get_max_threads()));
    const std::size_t end = std::min(cands.size(), i + chunk);
    std::vector<double> cov(end - i);
    if (end - i == 1) {
      cov[0] = evaluate(request, cands[i].config, true);
    } else {
      const auto n = static_cast<std::int64_t>(end - i);
#pragma omp parallel for schedule(dynamic)
      for (std::int64_t k = 0; k < n; ++k)
        cov[static_cast<std::size_t>(k)] = evaluate(request, cands[i + k].config, false);
    }
    for (std::size_t k = 0; k < cov.size(); ++k) {
      best = std::max(best, cov[k]);
      if (cov[k] >= request.coverage_threshold)
        return Generated{cands[i + k].config, cov[k], i + k + 1, cands[i + k].technique};
    }
    i = end;
  }
  return Failed{best, cands.size()};
}

Json to_json(const VariantRequest& r) {
  Json j = program_to_json(r.program);
  j["fault"] = to_json(r.fault);
  j["coverage_threshold"] = r.coverage_threshold;
  Json inputs = Json::array();
  for (const auto& in : r.test_inputs) inputs.push_back(words_to_json(in));
  j["test_inputs"] = inputs;
  j["search_budget"] = r.search_budget;
  j["seed"] = r.seed;
  return j;
}

VariantRequest variant_request_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("request must be a record");
  VariantRequest r;
  try {
    r.program = program_from_json(j);
    if (!j.contains("fault")) throw ConfigError("missing field 'fault'");
    r.fault = fault_definition_from_json(j.at("fault"));
    r.coverage_threshold = j.value("coverage_threshold", r.coverage_threshold);
    if (!j.contains("test_inputs")) throw ConfigError("missing field 'test_inputs'");
    for (const auto& in : j.at("test_inputs")) r.test_inputs.push_back(words_from_json(in));
    r.search_budget = j.value("search_budget", r.search_budget);
    r.seed = j.value("seed", r.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad request: ") + e.what());
  }
  r.validate();
  return r;
}

Json to_json(const VariantResponse& r) {
  Json j;
  if (const auto* g = std::get_if<Generated>(&r)) {
    j["result"] = "generated";
    j["config"] = to_json(g->config);
    j["coverage"] = g->coverage;
    j["configs_tried"] = g->configs_tried;
    j["technique"] = std::string(to_string(g->technique));
  } else {
    const auto& f = std::get<Failed>(r);
    j["result"] = "failed";
    j["best_coverage"] = f.best_coverage;
    j["configs_tried"] = f.configs_tried;
  }
  return j;
}

VariantResponse variant_response_from_json(const Json& j) {
  try {
    const auto result = j.at("result").get<std::string>();
    if (result == "generated")
      return Generated{config_from_json(j.at("config")), j.at("coverage").get<double>(),
                       j.at("configs_tried").get<std::size_t>(),
                       parse_technique(j.at("technique").get<std::string>())};
    if (result == "failed")
      return Failed{j.at("best_coverage").get<double>(), j.at("configs_tried").get<std::size_t>()};
    if (result == "error") throw ConfigError("server error: " + j.value("message", std::string()));
    throw ConfigError("unknown result '" + result + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad response: ") + e.what());
  }
}

VariantServer::VariantServer(std::uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw IoError(std::string("socket: ") + std::strerror(errno));
  const int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 ||
      ::listen(fd_, 8) < 0) {
    const std::string msg = std::strerror(errno);
    ::close(fd_);
    throw IoError("cannot listen on port " + std::to_string(port) + ": " + msg);
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

VariantServer::~VariantServer() {
  if (fd_ >= 0) ::close(fd_);
}

void VariantServer::serve(std::size_t max_requests) {
  std::size_t served = 0;
  while (max_requests == 0 || served < max_requests) {
    Fd client{::accept(fd_, nullptr, nullptr)};
    if (client.fd < 0) {
      if (errno == EINTR) continue;
      throw IoError(std::string("accept: ") + std::strerror(errno));
    }
    try {
      while (auto body = receive_record(client.fd)) {
        Json reply;
        try {
          reply = to_json(generate_variant(variant_request_from_json(Json::parse(*body))));
        } catch (const std::exception& e) {
          reply = Json{{"result", "error"}, {"message", e.what()}};
        }
        send_record(client.fd, reply.dump());
        ++served;
        if (max_requests != 0 && served >= max_requests) break;
      }
    } catch (const IoError&) {
    }
  }
}

VariantResponse request_variant(const std::string& host, std::uint16_t port,
                                const VariantRequest& request) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || !res)
    throw IoError("cannot resolve " + host);
  Fd sock{::socket(res->ai_family, res->ai_socktype, res->ai_protocol)};
  const int rc = sock.fd < 0 ? -1 : ::connect(sock.fd, res->ai_addr, res->ai_addrlen);
  ::freeaddrinfo(res);
  if (rc < 0)
    throw IoError("cannot connect to " + host + ":" + std::to_string(port) + ": " +
                  std::strerror(errno));
  send_record(sock.fd, to_json(request).dump());
  auto body = receive_record(sock.fd);
  if (!body) throw IoError("server closed the connection");
  try {
    return variant_response_from_json(Json::parse(*body));
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(std::string("malformed response: ") + e.what());
  }
}

}  // namespace adaptdiv
