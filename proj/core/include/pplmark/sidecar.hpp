// Copyright 2026 The pplmark Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Client for out-of-process perplexity scorers.
//
// The sidecar is a child process speaking line-delimited JSON on its standard
// input and output, one request and one reply per line:
//
//   {"id":1,"cmd":"train","texts":[["a","b"]],"params":{"epochs":5,"block_size":1024,"window":20,"seed":0}}
//   {"id":2,"cmd":"score","texts":[["a","b"]]}
//   {"id":3,"cmd":"reset"}
//
//   {"id":2,"ok":true,"ppl":7.0,"k":2}
//   {"id":2,"ok":false,"error":"..."}
//
// While training the sidecar may emit heartbeats {"id":1,"progress":0.5}.
// Each text is one transcript's tokens. The seed is mirrored in the child's
// PPL_SCORER_SEED environment variable.

#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <sys/types.h>

namespace pplmark {

struct SidecarOptions {
  std::vector<std::string> command;
  std::uint64_t seed = 0;
  std::optional<std::chrono::milliseconds> train_timeout;
  std::chrono::milliseconds score_timeout{300'000};
};

struct TrainParams {
  int epochs = 0;
  int block_size = 1024;
  int window = 20;
  std::uint64_t seed = 0;
};

struct SidecarScore {
  double ppl = 0;
  std::size_t k = 0;
};

using TokenText = std::vector<std::string>;

std::string encode_train_request(std::int64_t id, std::span<const TokenText> texts,
                                 const TrainParams& params);
std::string encode_score_request(std::int64_t id, std::span<const TokenText> texts);
std::string encode_reset_request(std::int64_t id);

enum class ReplyKind { Ack, Score };

// Decodes one reply line. Returns nullopt for a heartbeat of the same id.
// Throws ProtocolViolation for malformed replies and TrainingFailure or
// ScoringFailure (carrying the sidecar's error text verbatim) for ok=false.
std::optional<SidecarScore> decode_reply(std::string_view line, std::int64_t expected_id,
                                         ReplyKind kind, bool training);

class SidecarClient {
 public:
  // Spawns the child. Throws ScorerStartFailure.
  explicit SidecarClient(SidecarOptions options);
  ~SidecarClient();

  SidecarClient(const SidecarClient&) = delete;
  SidecarClient& operator=(const SidecarClient&) = delete;

  void train(std::span<const TokenText> texts, const TrainParams& params);
  SidecarScore score(std::span<const TokenText> texts);
  void reset();

  // Replaces a dead (or live) child with a fresh one and replays the last
  // successful train request.
  void restart();

  bool alive() const { return pid_ > 0; }
  pid_t pid() const { return pid_; }
  std::size_t heartbeats() const { return heartbeats_; }

 private:
  void spawn();
  void terminate();
  std::optional<SidecarScore> call(const std::string& request, std::int64_t id, ReplyKind kind,
                                   bool training);
  [[noreturn]] void crashed(const std::string& what);
  std::string read_line(std::chrono::steady_clock::time_point deadline, bool has_deadline);
  void drain_stderr();

  SidecarOptions options_;
  pid_t pid_ = -1;
  int io_fd_ = -1;
  int err_fd_ = -1;
  std::string out_buf_;
  std::string err_tail_;
  std::int64_t next_id_ = 1;
  std::size_t heartbeats_ = 0;
  bool training_ = false;
  std::optional<std::pair<std::vector<TokenText>, TrainParams>> last_train_;
};

}  // namespace pplmark
