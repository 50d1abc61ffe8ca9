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

#include "pplmark/sidecar.hpp"

#include <cerrno>
#include <cmath>
#include <cstring>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "pplmark/error.hpp"

extern char** environ;

namespace pplmark {
namespace {

using ordered_json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

constexpr std::size_t kStderrTail = 8192;
constexpr std::string_view kSeedVariable = "PPL_SCORER_SEED";

std::string dump_line(const ordered_json& j) {
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

std::string describe_status(int status) {
  if (WIFEXITED(status)) return "exited with status " + std::to_string(WEXITSTATUS(status));
  if (WIFSIGNALED(status)) return "killed by signal " + std::to_string(WTERMSIG(status));
  return "stopped";
}

}  // namespace

std::string encode_train_request(std::int64_t id, std::span<const TokenText> texts,
                                 const TrainParams& params) {
  ordered_json j;
  j["id"] = id;
  j["cmd"] = "train";
  j["texts"] = ordered_json::array();
  for (const auto& t : texts) j["texts"].push_back(t);
  ordered_json p;
  p["epochs"] = params.epochs;
  p["block_size"] = params.block_size;
  p["window"] = params.window;
  p["seed"] = params.seed;
  j["params"] = std::move(p);
  return dump_line(j);
}

std::string encode_score_request(std::int64_t id, std::span<const TokenText> texts) {
  ordered_json j;
  j["id"] = id;
  j["cmd"] = "score";
  j["texts"] = ordered_json::array();
  for (const auto& t : texts) j["texts"].push_back(t);
  return dump_line(j);
}

std::string encode_reset_request(std::int64_t id) {
  ordered_json j;
  j["id"] = id;
  j["cmd"] = "reset";
  return dump_line(j);
}

std::optional<SidecarScore> decode_reply(std::string_view line, std::int64_t expected_id,
                                         ReplyKind kind, bool training) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    raise(ErrorKind::ProtocolViolation, "reply is not JSON: " + std::string(line));
  }
  if (!j.is_object()) raise(ErrorKind::ProtocolViolation, "reply is not an object");
  auto id = j.find("id");
  if (id == j.end() || !id->is_number_integer() || id->get<std::int64_t>() != expected_id) {
    raise(ErrorKind::ProtocolViolation,
          "reply id does not match request " + std::to_string(expected_id));
  }
  if (j.contains("progress") && !j.contains("ok")) {
    if (!j["progress"].is_number()) raise(ErrorKind::ProtocolViolation, "bad heartbeat");
    return std::nullopt;
  }
  auto ok = j.find("ok");
  if (ok == j.end() || !ok->is_boolean()) {
    raise(ErrorKind::ProtocolViolation, "reply lacks boolean 'ok'");
  }
  if (!ok->get<bool>()) {
    auto err = j.find("error");
    if (err == j.end() || !err->is_string()) {
      raise(ErrorKind::ProtocolViolation, "failed reply lacks 'error' text");
    }
    raise(training ? ErrorKind::TrainingFailure : ErrorKind::ScoringFailure,
          err->get<std::string>());
  }
  SidecarScore s;
  if (kind == ReplyKind::Score) {
    auto ppl = j.find("ppl");
    auto k = j.find("k");
    if (ppl == j.end() || !ppl->is_number()) raise(ErrorKind::ProtocolViolation, "reply lacks ppl");
    s.ppl = ppl->get<double>();
    if (!std::isfinite(s.ppl) || !(s.ppl > 0)) {
      raise(ErrorKind::ProtocolViolation, "ppl must be finite and positive");
    }
    if (k == j.end() || !k->is_number_integer() || k->get<std::int64_t>() < 1) {
      raise(ErrorKind::ProtocolViolation, "reply lacks a positive integer k");
    }
    s.k = k->get<std::size_t>();
  }
  return s;
}

// ---------------------------------------------------------------------------

SidecarClient::SidecarClient(SidecarOptions options) : options_(std::move(options)) { spawn(); }

SidecarClient::~SidecarClient() { terminate(); }

void SidecarClient::spawn() {
  if (options_.command.empty()) raise(ErrorKind::ScorerStartFailure, "empty sidecar command");

  int io[2];
  int err[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, io) != 0) {
    raise(ErrorKind::ScorerStartFailure, std::string("socketpair: ") + std::strerror(errno));
  }
  if (::pipe2(err, O_CLOEXEC) != 0) {
    ::close(io[0]);
    ::close(io[1]);
    raise(ErrorKind::ScorerStartFailure, std::string("pipe: ") + std::strerror(errno));
  }

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, io[1], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, io[1], STDOUT_FILENO);
  posix_spawn_file_actions_adddup2(&actions, err[1], STDERR_FILENO);

  std::vector<std::string> env_store;
  const std::string seed_entry = std::string(kSeedVariable) + "=" + std::to_string(options_.seed);
  for (char** e = environ; e && *e; ++e) {
    std::string_view entry(*e);
    if (entry.substr(0, kSeedVariable.size() + 1) == std::string(kSeedVariable) + "=") continue;
    env_store.emplace_back(entry);
  }
  env_store.push_back(seed_entry);
  std::vector<char*> envp;
  for (auto& s : env_store) envp.push_back(s.data());
  envp.push_back(nullptr);

  std::vector<std::string> args = options_.command;
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);

  pid_t pid = -1;
  int rc = ::posix_spawnp(&pid, argv[0], &actions, nullptr, argv.data(), envp.data());
  posix_spawn_file_actions_destroy(&actions);
  ::close(io[1]);
  ::close(err[1]);
  if (rc != 0) {
    ::close(io[0]);
    ::close(err[0]);
    raise(ErrorKind::ScorerStartFailure,
          "cannot launch '" + options_.command.front() + "': " + std::strerror(rc));
  }
  ::fcntl(err[0], F_SETFL, ::fcntl(err[0], F_GETFL) | O_NONBLOCK);
  pid_ = pid;
  io_fd_ = io[0];
  err_fd_ = err[0];
  out_buf_.clear();
  err_tail_.clear();
}

void SidecarClient::terminate() {
  if (io_fd_ >= 0) {
    ::shutdown(io_fd_, SHUT_WR);
  }
  if (pid_ > 0) {
    int status = 0;
    auto until = Clock::now() + std::chrono::seconds(2);
    pid_t r = 0;
    while ((r = ::waitpid(pid_, &status, WNOHANG)) == 0 && Clock::now() < until) {
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    if (r == 0) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
    }
    pid_ = -1;
  }
  if (io_fd_ >= 0) ::close(io_fd_);
  if (err_fd_ >= 0) ::close(err_fd_);
  io_fd_ = -1;
  err_fd_ = -1;
}

void SidecarClient::drain_stderr() {
  if (err_fd_ < 0) return;
  char buf[4096];
  for (;;) {
    ssize_t n = ::read(err_fd_, buf, sizeof buf);
    if (n <= 0) break;
    err_tail_.append(buf, static_cast<std::size_t>(n));
    if (err_tail_.size() > kStderrTail) err_tail_.erase(0, err_tail_.size() - kStderrTail);
  }
}

void SidecarClient::crashed(const std::string& what) {
  std::string status = "still running";
  if (pid_ > 0) {
    int st = 0;
    pid_t r = ::waitpid(pid_, &st, WNOHANG);
    if (r == 0) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, &st, 0);
      status = "killed";
    } else if (r == pid_) {
      status = describe_status(st);
    }
    pid_ = -1;
  }
  drain_stderr();
  std::string diag = err_tail_;
  if (io_fd_ >= 0) ::close(io_fd_);
  if (err_fd_ >= 0) ::close(err_fd_);
  io_fd_ = -1;
  err_fd_ = -1;
  raise(ErrorKind::ScorerCrashed,
        "sidecar " + what + " (" + status + ")" + (diag.empty() ? "" : "; stderr: " + diag));
}

std::string SidecarClient::read_line(Clock::time_point deadline, bool has_deadline) {
  for (;;) {
    if (auto nl = out_buf_.find('\n'); nl != std::string::npos) {
      std::string line = out_buf_.substr(0, nl);
      out_buf_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    int timeout_ms = -1;
    if (has_deadline) {
      auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
      if (left.count() <= 0) crashed("timed out");
      timeout_ms = static_cast<int>(std::min<long long>(left.count(), 1 << 30));
    }
    pollfd fds[2] = {{io_fd_, POLLIN, 0}, {err_fd_, POLLIN, 0}};
    int rc = ::poll(fds, 2, timeout_ms);
    if (rc < 0) {
      if (errno == EINTR) continue;
      crashed(std::string("poll failed: ") + std::strerror(errno));
    }
    if (rc == 0) continue;  // deadline re-checked above
    if (fds[1].revents & (POLLIN | POLLHUP)) drain_stderr();
    if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
      char buf[65536];
      ssize_t n = ::read(io_fd_, buf, sizeof buf);
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        crashed(std::string("read failed: ") + std::strerror(errno));
      }
      if (n == 0) crashed("closed its output");
      out_buf_.append(buf, static_cast<std::size_t>(n));
    }
  }
}

std::optional<SidecarScore> SidecarClient::call(const std::string& request, std::int64_t id,
                                                ReplyKind kind, bool training) {
  if (!alive()) raise(ErrorKind::ScorerCrashed, "sidecar is not running; restart it first");

  std::size_t off = 0;
  while (off < request.size()) {
    ssize_t n = ::send(io_fd_, request.data() + off, request.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      crashed(std::string("rejected input: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }

  const auto timeout = training ? options_.train_timeout
                                : std::optional<std::chrono::milliseconds>(options_.score_timeout);
  auto deadline = Clock::now() + timeout.value_or(std::chrono::milliseconds(0));
  for (;;) {
    std::string line = read_line(deadline, timeout.has_value());
    try {
      auto reply = decode_reply(line, id, kind, training);
      if (reply) return reply;
      ++heartbeats_;
      if (timeout) deadline = Clock::now() + *timeout;
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::ProtocolViolation) {
        // The stream can no longer be trusted to line up with request ids.
        if (pid_ > 0) {
          ::kill(pid_, SIGKILL);
          ::waitpid(pid_, nullptr, 0);
          pid_ = -1;
        }
        ::close(io_fd_);
        ::close(err_fd_);
        io_fd_ = err_fd_ = -1;
      }
      throw;
    }
  }
}

void SidecarClient::train(std::span<const TokenText> texts, const TrainParams& params) {
  const auto id = next_id_++;
  call(encode_train_request(id, texts, params), id, ReplyKind::Ack, true);
  last_train_.emplace(std::vector<TokenText>(texts.begin(), texts.end()), params);
}

SidecarScore SidecarClient::score(std::span<const TokenText> texts) {
  const auto id = next_id_++;
  return *call(encode_score_request(id, texts), id, ReplyKind::Score, false);
}

void SidecarClient::reset() {
  const auto id = next_id_++;
  call(encode_reset_request(id), id, ReplyKind::Ack, false);
  last_train_.reset();
}

void SidecarClient::restart() {
  terminate();
  spawn();
  if (last_train_) {
    auto replay = std::move(*last_train_);
    last_train_.reset();
    train(replay.first, replay.second);
  }
}

}  // namespace pplmark
