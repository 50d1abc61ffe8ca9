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

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "pplmark/chat.hpp"
#include "pplmark/types.hpp"

namespace pplmark {

// Normalized corpus document: a top-level array of subject records
//
//   [{"subject_id": "001", "group": "Control", "sessions": ["0", "2"],
//     "transcripts": [[["the", "boy"], ...], ...]}, ...]
//
// `transcripts[i]` is the utterance list of session `sessions[i]`.
std::string corpus_to_json(const Corpus& corpus);
Corpus corpus_from_json(std::string_view text);
Corpus load_corpus_json(const std::filesystem::path& path);

// CSV with one row per group:
//   group,avg_tokens,avg_unique_tokens,participants,transcripts,ttr
std::string stats_to_csv(std::span<const GroupStats> rows);

}  // namespace pplmark
