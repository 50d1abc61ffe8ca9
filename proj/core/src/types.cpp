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

#include "pplmark/types.hpp"

#include <algorithm>
#include <cctype>
#include <tuple>

namespace pplmark {

std::string_view to_string(Group group) {
  return group == Group::Control ? "Control" : "AD";
}

std::optional<Group> parse_group(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "control" || lower == "c") return Group::Control;
  if (lower == "ad" || lower == "dementia") return Group::AD;
  return std::nullopt;
}

std::size_t Transcript::token_count() const {
  std::size_t n = 0;
  for (const auto& u : utterances) n += u.size();
  return n;
}

const SubjectRecord* Corpus::find(std::string_view subject_id) const {
  for (const auto& s : subjects) {
    if (s.subject_id == subject_id) return &s;
  }
  return nullptr;
}

std::size_t Corpus::subject_count(Group group) const {
  return static_cast<std::size_t>(std::count_if(
      subjects.begin(), subjects.end(),
      [group](const SubjectRecord& s) { return s.group == group; }));
}

std::size_t Corpus::transcript_count() const {
  std::size_t n = 0;
  for (const auto& s : subjects) n += s.transcripts.size();
  return n;
}

std::size_t Corpus::transcript_count(Group group) const {
  std::size_t n = 0;
  for (const auto& s : subjects) {
    if (s.group == group) n += s.transcripts.size();
  }
  return n;
}

void Corpus::sort() {
  for (auto& s : subjects) {
    std::sort(s.transcripts.begin(), s.transcripts.end(),
              [](const Transcript& a, const Transcript& b) {
                return a.session_id < b.session_id;
              });
  }
  std::sort(subjects.begin(), subjects.end(),
            [](const SubjectRecord& a, const SubjectRecord& b) {
              return std::tie(a.group, a.subject_id) < std::tie(b.group, b.subject_id);
            });
}

}  // namespace pplmark
