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

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pplmark/types.hpp"
#include "pplmark/vocabulary.hpp"

namespace pplmark {

enum class ScorerKind { NgramMLE, NgramKN, External };

// "ngram-mle", "ngram-kn", "external".
std::string_view to_string(ScorerKind kind);
std::optional<ScorerKind> parse_scorer_kind(std::string_view text);

struct NgramScorerParams {
  int order = 2;
  double discount = 0.1;
};

struct ExternalScorerParams {
  std::vector<std::string> command;
  int epochs = 0;
  int block_size = 1024;
  int window = 20;
  std::uint64_t seed = 0;
  std::optional<std::chrono::milliseconds> train_timeout;  // unbounded when empty
  std::chrono::milliseconds score_timeout{300'000};
};

// The fine-tuning schedule explored for the neural scorer. 0 means the
// pre-trained model is used as is.
inline constexpr int kStandardEpochs[] = {0, 5, 10, 20, 30};

struct ScorerSpec {
  ScorerKind kind = ScorerKind::NgramKN;
  std::variant<NgramScorerParams, ExternalScorerParams> params = NgramScorerParams{};

  static ScorerSpec ngram(ScorerKind kind, int order = 2, double discount = 0.1);
  static ScorerSpec external(ExternalScorerParams params);

  const NgramScorerParams& ngram_params() const;
  const ExternalScorerParams& external_params() const;

  // Throws InvalidArgument.
  void validate() const;
  // Short label such as "2-grams", "2-grams-mle" or "external-5-epochs".
  std::string id() const;
  // Stable JSON of every parameter that changes scores (timeouts excluded).
  std::string canonical_json() const;
};

struct PerplexityScore {
  double value = 0;            // finite, > 0
  std::size_t token_count = 0;  // predicted positions, >= 1
  std::string scorer_id;
};

// A fitted scorer. One caller at a time.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual PerplexityScore score(std::span<const Utterance> transcript) = 0;
  virtual const std::string& id() const = 0;
};

// Throws EmptyInput, InvalidArgument, ScorerStartFailure or TrainingFailure.
std::unique_ptr<Scorer> fit(const ScorerSpec& spec,
                            std::span<const Transcript* const> training_texts,
                            std::shared_ptr<const Vocabulary> vocab);
std::unique_ptr<Scorer> fit(const ScorerSpec& spec, std::span<const Transcript> training_texts,
                            std::shared_ptr<const Vocabulary> vocab);

}  // namespace pplmark
