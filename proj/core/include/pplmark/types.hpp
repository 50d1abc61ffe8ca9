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

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pplmark {

// Diagnostic group of a subject. AD is the positive class throughout.
enum class Group { Control, AD };

inline constexpr Group kGroups[] = {Group::Control, Group::AD};

std::string_view to_string(Group group);
std::optional<Group> parse_group(std::string_view text);
inline Group other(Group group) {
  return group == Group::Control ? Group::AD : Group::Control;
}

using Utterance = std::vector<std::string>;

// One interview: the interviewee's cleaned utterances.
struct Transcript {
  std::string subject_id;
  std::string session_id;
  Group group = Group::Control;
  std::vector<Utterance> utterances;

  std::size_t token_count() const;

  friend bool operator==(const Transcript&, const Transcript&) = default;
};

struct SubjectRecord {
  std::string subject_id;
  Group group = Group::Control;
  std::vector<Transcript> transcripts;  // ordered by session_id

  friend bool operator==(const SubjectRecord&, const SubjectRecord&) = default;
};

// Subjects are kept ordered by (group, subject_id) so every traversal of a
// corpus is deterministic.
struct Corpus {
  std::vector<SubjectRecord> subjects;

  const SubjectRecord* find(std::string_view subject_id) const;
  std::size_t subject_count(Group group) const;
  std::size_t transcript_count() const;
  std::size_t transcript_count(Group group) const;

  // Re-establishes the (group, subject_id) ordering.
  void sort();

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

}  // namespace pplmark
