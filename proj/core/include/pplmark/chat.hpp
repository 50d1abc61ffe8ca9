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

// CHAT transcript ingestion.
//
// Only the interviewee's main tiers are kept. Each tier is reduced to plain
// lowercase word tokens by a fixed, ordered rule table:
//
//   1. media bullets (\x15...\x15) are deleted;
//   2. CHAT layout symbols (overlap brackets, intonation arrows, tag and
//      vocative marks, curly quotes) are deleted;
//   3. the line is lexed into words, <...> scopes and [...] codes; pause
//      marks such as (.), (..), (...) and (1.5) are discarded here;
//   4. retracing codes [/] [//] [///] [/-] [/?] delete the word or <scope>
//      they follow; every other code is deleted and its scope kept; codes
//      not in the table are deleted with a warning;
//   5. words starting with '&' (fillers, fragments, events, interposed
//      words) or '+' (terminators, linkers) are deleted;
//   6. special-form suffixes (word@l, word@s:eng) are cut;
//   7. the remaining word is lowercased and reduced to letters, digits,
//      apostrophes, hyphens and non-ASCII bytes; edge apostrophes and
//      hyphens are trimmed; so sit(ting) becomes sitting and bo:y becomes boy;
//   8. empty results, unintelligible markers (xxx yyy www), omitted words
//      (0is) and hesitation forms (uh um er erm uhm hm hmm) are deleted.
//
// Terminal punctuation disappears in step 7. Stopwords are kept.

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pplmark/error.hpp"
#include "pplmark/types.hpp"

namespace pplmark {

struct ChatOptions {
  // Speaker codes of the main tiers to keep (without the leading '*').
  std::vector<std::string> target_speakers{"PAR"};
};

std::vector<std::string> normalize_utterance(std::string_view line,
                                             std::vector<std::string>* warnings = nullptr);

struct TranscriptIdentity {
  std::string subject_id;
  std::string session_id;
  Group group = Group::Control;
};

// Throws MalformedChat when the text is not a CHAT document (no @ header, or
// a main tier without a speaker colon) and EmptyTranscript when no target
// utterance survives normalization.
Transcript parse_chat_file(std::string_view raw, TranscriptIdentity identity,
                           const ChatOptions& options = {},
                           std::vector<std::string>* warnings = nullptr);

struct LoadOptions {
  std::string control_dir = "Control";
  std::string dementia_dir = "Dementia";
  // Optional task subdirectory inside each class directory (e.g. "cookie").
  std::string task_subdir;
  bool recursive = false;
  std::string extension = ".cha";
  // Applied to the file stem; group 1 is the subject, group 2 the session.
  std::string name_pattern = R"(^(.+)-([^-]+)$)";
  ChatOptions chat;
};

struct FileIssue {
  std::filesystem::path path;
  ErrorKind kind;
  std::string message;
};

struct LoadResult {
  Corpus corpus;
  std::vector<FileIssue> issues;      // files that could not be used
  std::vector<std::string> warnings;  // non-fatal normalization notes
  std::size_t files_seen = 0;
};

// Throws MissingClassDirectory or DuplicateSession; every other per-file
// problem is reported in LoadResult::issues.
LoadResult load_corpus(const std::filesystem::path& root, const LoadOptions& options = {});

// Keeps exactly the subjects with at least `min_sessions` transcripts.
Corpus filter_multi_session(Corpus corpus, std::size_t min_sessions = 2);

struct GroupStats {
  Group group = Group::Control;
  double avg_tokens = 0;
  double avg_unique_tokens = 0;
  std::size_t participants = 0;
  std::size_t transcripts = 0;
  double ttr = 0;
};

struct CorpusStats {
  GroupStats control;
  GroupStats ad;
};

// Throws EmptyGroup when the group has no transcripts.
GroupStats group_stats(const Corpus& corpus, Group group);
CorpusStats corpus_stats(const Corpus& corpus);

}  // namespace pplmark
