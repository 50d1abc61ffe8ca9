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

// Scripted sidecar for client tests. Usage: stub_sidecar <mode>
//
//   fixed      every score is ppl 7.0 with k = tokens + texts
//   overlap    ppl = 1 + 10 * (share of scored tokens unseen in training)
//   crash      exits with status 3 on the first score request
//   malformed  answers score requests with a non-JSON line
//   badppl     answers score requests with ppl -1
//   wrongid    answers with an id one higher than requested
//   trainfail  rejects train requests with a fixed error text
//   heartbeat  emits three progress lines before acknowledging train
//   seed       ppl = 1 + PPL_SCORER_SEED
//   hang       never answers score requests
//   noexec     handled by the test: the binary path does not exist

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <set>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "fixed";
  std::set<std::string> seen;

  std::string line;
  while (std::getline(std::cin, line)) {
    auto req = nlohmann::json::parse(line, nullptr, false);
    if (req.is_discarded()) {
      std::cerr << "stub: unreadable request\n";
      return 2;
    }
    const auto id = req.value("id", 0LL);
    const auto cmd = req.value("cmd", std::string());
    nlohmann::ordered_json reply;
    reply["id"] = id;

    if (cmd == "train") {
      if (mode == "trainfail") {
        reply["ok"] = false;
        reply["error"] = "CUDA out of memory (stub)";
      } else {
        if (mode == "heartbeat") {
          for (double p : {0.25, 0.5, 0.75}) {
            std::cout << nlohmann::ordered_json{{"id", id}, {"progress", p}}.dump() << "\n";
            std::cout.flush();
          }
        }
        for (const auto& t : req["texts"]) {
          for (const auto& w : t) seen.insert(w.get<std::string>());
        }
        reply["ok"] = true;
      }
    } else if (cmd == "score") {
      std::size_t k = 0;
      std::size_t unseen = 0;
      std::size_t tokens = 0;
      for (const auto& t : req["texts"]) {
        k += t.size() + 1;
        for (const auto& w : t) {
          ++tokens;
          if (!seen.count(w.get<std::string>())) ++unseen;
        }
      }
      if (mode == "crash") {
        std::cerr << "stub: simulated crash\n";
        return 3;
      }
      if (mode == "hang") {
        std::this_thread::sleep_for(std::chrono::hours(1));
      }
      if (mode == "malformed") {
        std::cout << "this is not json\n";
        std::cout.flush();
        continue;
      }
      double ppl = 7.0;
      if (mode == "overlap") ppl = 1.0 + 10.0 * double(unseen) / double(tokens ? tokens : 1);
      if (mode == "badppl") ppl = -1.0;
      if (mode == "seed") {
        const char* s = std::getenv("PPL_SCORER_SEED");
        ppl = 1.0 + (s ? std::atof(s) : -100.0);
      }
      if (mode == "wrongid") reply["id"] = id + 1;
      reply["ok"] = true;
      reply["ppl"] = ppl;
      reply["k"] = k;
    } else if (cmd == "reset") {
      seen.clear();
      reply["ok"] = true;
    } else {
      reply["ok"] = false;
      reply["error"] = "unknown command '" + cmd + "'";
    }
    std::cout << reply.dump() << "\n";
    std::cout.flush();
  }
  return 0;
}
