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

// Closed-vocabulary N-gram language models, orders 2 to 5.
//
// Every utterance is padded with order-1 start symbols and one end symbol.
// Each real token and the end symbol is a predicted position; histories never
// cross utterance boundaries.
//
// Two estimators share one count store:
//
//   MLE             P(w | h) = C(h w) / C(h), and 0 for an unseen history.
//
//   Kneser-Ney      interpolated absolute discounting with one discount d at
//                   every order:
//                     P(w | h) = (max(c(h w) - d, 0) + d * N1+(h .) * P(w | h'))
//                                / c(h .)
//                   where h' drops the oldest history token. The highest order
//                   uses raw counts; lower orders use continuation counts
//                   (distinct left neighbours). The unigram level
//                   interpolates with the uniform distribution 1/|V|. A history
//                   with no counts hands all its mass to the next lower order.

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pplmark/types.hpp"
#include "pplmark/vocabulary.hpp"

namespace pplmark {

inline constexpr int kMinOrder = 2;
inline constexpr int kMaxOrder = 5;

enum class Estimator { MLE, KneserNey };

std::string_view to_string(Estimator estimator);

struct NgramConfig {
  int order = 2;
  double discount = 0.1;
  Estimator estimator = Estimator::KneserNey;
};

// History of at most kMaxOrder-1 ids, stored inline.
struct ContextKey {
  std::array<WordId, kMaxOrder - 1> ids{};
  std::uint8_t size = 0;

  static ContextKey of(std::span<const WordId> ids);
  std::span<const WordId> view() const { return {ids.data(), size}; }
  friend bool operator==(const ContextKey& a, const ContextKey& b) {
    return a.size == b.size && a.ids == b.ids;
  }
};

struct ContextKeyHash {
  std::size_t operator()(const ContextKey& key) const noexcept;
};

// Followers of one history: word -> count, plus their sum.
struct ContextRow {
  std::unordered_map<WordId, std::uint64_t> next;
  std::uint64_t total = 0;

  std::uint64_t count(WordId w) const {
    auto it = next.find(w);
    return it == next.end() ? 0 : it->second;
  }
};

class NgramCounts {
 public:
  explicit NgramCounts(int order);

  // Throws EmptyInput, InvalidOrder or OutOfVocabularyTraining.
  static NgramCounts from_texts(int order, std::span<const Utterance> texts,
                                const Vocabulary& vocab);

  int order() const { return order_; }

  // Raw occurrences of `ngram` (1 <= size <= order) ending at a predicted
  // position.
  std::uint64_t count(std::span<const WordId> ngram) const;
  // Sum of raw counts over all words following `context`.
  std::uint64_t context_total(std::span<const WordId> context) const;
  // Number of distinct words v such that (v, ngram) was counted. Defined for
  // ngram sizes below the model order.
  std::uint64_t continuation_count(std::span<const WordId> ngram) const;

  const ContextRow* raw_row(std::span<const WordId> context) const;
  const ContextRow* continuation_row(std::span<const WordId> context) const;

  // Visits every raw n-gram of one size in sorted order.
  void for_each(int size, const std::function<void(std::span<const WordId>, std::uint64_t)>& fn) const;

  // Low-level construction used by deserialization: add raw n-grams, then
  // rebuild the derived continuation tables.
  void add(std::span<const WordId> ngram, std::uint64_t count);
  void rebuild_continuations();

  friend bool operator==(const NgramCounts& a, const NgramCounts& b);

 private:
  using Level = std::unordered_map<ContextKey, ContextRow, ContextKeyHash>;

  int order_;
  std::vector<Level> raw_;   // raw_[k-1] holds k-grams keyed by their history
  std::vector<Level> cont_;  // cont_[k-1] for k < order_
};

struct ScoreSummary {
  double logprob = 0;           // natural log, <= 0
  std::size_t positions = 0;     // predicted positions k
};

// Immutable once built; safe for concurrent read-only use.
class NgramModel {
 public:
  // Throws EmptyInput, InvalidOrder, InvalidArgument (discount outside (0,1)
  // for Kneser-Ney) or OutOfVocabularyTraining.
  static NgramModel train(const NgramConfig& config, std::span<const Utterance> texts,
                          std::shared_ptr<const Vocabulary> vocab);
  // A Kneser-Ney model without counts: every position gets 1/|V|.
  static NgramModel uniform(int order, std::shared_ptr<const Vocabulary> vocab);

  int order() const { return counts_.order(); }
  double discount() const { return discount_; }
  Estimator estimator() const { return estimator_; }
  const Vocabulary& vocabulary() const { return *vocab_; }
  std::shared_ptr<const Vocabulary> shared_vocabulary() const { return vocab_; }
  const NgramCounts& counts() const { return counts_; }

  // `context` holds exactly order-1 tokens, oldest first. Throws UnknownWord
  // or InvalidArgument.
  double prob(std::string_view word, std::span<const std::string> context) const;
  double prob(WordId word, std::span<const WordId> context) const;

  // Throws UnknownWord.
  ScoreSummary score(std::span<const Utterance> utterances) const;

  std::string to_json() const;
  // Throws FormatError.
  static NgramModel from_json(std::string_view text);

 private:
  NgramModel(NgramCounts counts, double discount, Estimator estimator,
             std::shared_ptr<const Vocabulary> vocab);

  friend double perplexity(const NgramModel& model, std::span<const Utterance> utterances);

  struct ExactScore {
    long double logprob = 0;
    std::size_t positions = 0;
  };

  long double prob_ld(WordId word, std::span<const WordId> context) const;
  ExactScore score_exact(std::span<const Utterance> utterances) const;

  NgramCounts counts_;
  double discount_;
  Estimator estimator_;
  std::shared_ptr<const Vocabulary> vocab_;
};

double sequence_logprob(const NgramModel& model, std::span<const Utterance> utterances);
// exp(-logprob / k). Throws ZeroLength when there is no predicted position.
// Returns +inf when an MLE model assigns probability zero somewhere.
double perplexity(const NgramModel& model, std::span<const Utterance> utterances);

void save_model(const NgramModel& model, const std::string& path);
NgramModel load_model(const std::string& path);

}  // namespace pplmark
