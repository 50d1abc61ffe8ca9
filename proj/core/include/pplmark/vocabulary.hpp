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

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pplmark/types.hpp"

namespace pplmark {

using WordId = std::uint32_t;

inline constexpr std::string_view kSentenceStart = "<s>";
inline constexpr std::string_view kSentenceEnd = "</s>";
inline constexpr std::string_view kUnknownWord = "<unk>";

// Closed vocabulary. Ids 0..2 are the reserved boundary-start, boundary-end
// and unknown symbols; the remaining ids follow byte-wise token order.
class Vocabulary {
 public:
  static constexpr WordId kStartId = 0;
  static constexpr WordId kEndId = 1;
  static constexpr WordId kUnknownId = 2;

  // Throws EmptyInput when `texts` is empty.
  static Vocabulary build(std::span<const Utterance> texts);
  // Closed over every transcript of the corpus.
  static Vocabulary build(const Corpus& corpus);
  // Restores a serialized item list; validates the reserved prefix.
  static Vocabulary from_items(std::vector<std::string> items);

  std::size_t size() const { return items_.size(); }
  std::optional<WordId> find(std::string_view token) const;
  // Throws UnknownWord.
  WordId id(std::string_view token) const;
  const std::string& token(WordId id) const { return items_.at(id); }
  const std::vector<std::string>& items() const { return items_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.items_ == b.items_;
  }

 private:
  Vocabulary() = default;
  void index();

  std::vector<std::string> items_;
  std::map<std::string, WordId, std::less<>> ids_;
};

}  // namespace pplmark
