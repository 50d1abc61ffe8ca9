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

#pragma once

#include <ostream>

namespace pplmark::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;          // bad flags or configuration values
inline constexpr int kIngestFatal = 2;    // corpus tree cannot be ingested
inline constexpr int kScorerFailure = 3;  // scorer start, training or scoring
inline constexpr int kUnknownWord = 4;    // scored text outside the vocabulary
inline constexpr int kIoFormat = 5;       // unreadable or malformed files
inline constexpr int kDataError = 6;      // corpus unusable for the experiment

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pplmark::cli
