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

#include "pplmark/vocabulary.hpp"

#include <set>

#include "pplmark/error.hpp"

namespace pplmark {
namespace {

bool is_reserved(std::string_view t) {
  return t == kSentenceStart || t == kSentenceEnd || t == kUnknownWord;
}

}  // namespace

Vocabulary Vocabulary::build(std::span<const Utterance> texts) {
  if (texts.empty()) raise(ErrorKind::EmptyInput, "cannot build a vocabulary from no texts");
  std::set<std::string, std::less<>> distinct;
  for (const auto& u : texts) {
    for (const auto& w : u) {
      if (!is_reserved(w)) distinct.insert(w);
    }
  }
  Vocabulary v;
  v.items_ = {std::string(kSentenceStart), std::string(kSentenceEnd), std::string(kUnknownWord)};
  v.items_.insert(v.items_.end(), distinct.begin(), distinct.end());
  v.index();
  return v;
}

Vocabulary Vocabulary::build(const Corpus& corpus) {
  std::vector<Utterance> all;
  for (const auto& s : corpus.subjects) {
    for (const auto& t : s.transcripts) {
      all.insert(all.end(), t.utterances.begin(), t.utterances.end());
    }
  }
  return build(all);
}

Vocabulary Vocabulary::from_items(std::vector<std::string> items) {
  if (items.size() < 3 || items[kStartId] != kSentenceStart || items[kEndId] != kSentenceEnd ||
      items[kUnknownId] != kUnknownWord) {
    raise(ErrorKind::FormatError, "vocabulary must start with the reserved symbols");
  }
  Vocabulary v;
  v.items_ = std::move(items);
  v.index();
  if (v.ids_.size() != v.items_.size()) {
    raise(ErrorKind::FormatError, "vocabulary contains duplicate items");
  }
  return v;
}

void Vocabulary::index() {
  ids_.clear();
  for (std::size_t i = 0; i < items_.size(); ++i) {
    ids_.emplace(items_[i], static_cast<WordId>(i));
  }
}

std::optional<WordId> Vocabulary::find(std::string_view token) const {
  auto it = ids_.find(token);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

WordId Vocabulary::id(std::string_view token) const {
  auto found = find(token);
  if (!found) raise(ErrorKind::UnknownWord, "unknown word '" + std::string(token) + "'");
  return *found;
}

}  // namespace pplmark
