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

#include "pplmark/scorer.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "pplmark/error.hpp"
#include "pplmark/ngram.hpp"
#include "pplmark/sidecar.hpp"

namespace pplmark {
namespace {

class NgramScorer final : public Scorer {
 public:
  NgramScorer(NgramModel model, std::string id) : model_(std::move(model)), id_(std::move(id)) {}

  PerplexityScore score(std::span<const Utterance> transcript) override {
    PerplexityScore s;
    s.value = perplexity(model_, transcript);
    if (!std::isfinite(s.value)) {
      raise(ErrorKind::InfinitePerplexity,
            id_ + " assigns probability zero to an event in the scored transcript");
    }
    for (const auto& u : transcript) s.token_count += u.size() + 1;
    s.scorer_id = id_;
    return s;
  }

  const std::string& id() const override { return id_; }

 private:
  NgramModel model_;
  std::string id_;
};

TokenText flatten(std::span<const Utterance> utterances) {
  TokenText out;
  for (const auto& u : utterances) out.insert(out.end(), u.begin(), u.end());
  return out;
}

class ExternalScorer final : public Scorer {
 public:
  ExternalScorer(const ExternalScorerParams& p, std::string id)
      : client_(SidecarOptions{p.command, p.seed, p.train_timeout, p.score_timeout}),
        id_(std::move(id)) {}

  void train(std::span<const TokenText> texts, const ExternalScorerParams& p) {
    client_.train(texts, TrainParams{p.epochs, p.block_size, p.window, p.seed});
  }

  PerplexityScore score(std::span<const Utterance> transcript) override {
    const TokenText texts[] = {flatten(transcript)};
    auto r = client_.score(texts);
    return {r.ppl, r.k, id_};
  }

  const std::string& id() const override { return id_; }

 private:
  SidecarClient client_;
  std::string id_;
};

}  // namespace

std::string_view to_string(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::NgramMLE: return "ngram-mle";
    case ScorerKind::NgramKN: return "ngram-kn";
    case ScorerKind::External: return "external";
  }
  return "?";
}

std::optional<ScorerKind> parse_scorer_kind(std::string_view text) {
  if (text == "ngram-mle" || text == "mle") return ScorerKind::NgramMLE;
  if (text == "ngram-kn" || text == "kn" || text == "ngram") return ScorerKind::NgramKN;
  if (text == "external" || text == "neural") return ScorerKind::External;
  return std::nullopt;
}

ScorerSpec ScorerSpec::ngram(ScorerKind kind, int order, double discount) {
  ScorerSpec s;
  s.kind = kind;
  s.params = NgramScorerParams{order, discount};
  return s;
}

ScorerSpec ScorerSpec::external(ExternalScorerParams params) {
  ScorerSpec s;
  s.kind = ScorerKind::External;
  s.params = std::move(params);
  return s;
}

const NgramScorerParams& ScorerSpec::ngram_params() const {
  if (const auto* p = std::get_if<NgramScorerParams>(&params)) return *p;
  raise(ErrorKind::InvalidArgument, "scorer spec has no n-gram parameters");
}

const ExternalScorerParams& ScorerSpec::external_params() const {
  if (const auto* p = std::get_if<ExternalScorerParams>(&params)) return *p;
  raise(ErrorKind::InvalidArgument, "scorer spec has no external parameters");
}

void ScorerSpec::validate() const {
  if (kind == ScorerKind::External) {
    const auto& p = external_params();
    if (p.command.empty()) raise(ErrorKind::InvalidArgument, "external scorer needs a command");
    if (p.epochs < 0) raise(ErrorKind::InvalidArgument, "epochs must be >= 0");
    if (p.block_size < 1) raise(ErrorKind::InvalidArgument, "block size must be >= 1");
    if (p.window < 1) raise(ErrorKind::InvalidArgument, "window must be >= 1");
    return;
  }
  const auto& p = ngram_params();
  if (p.order < kMinOrder || p.order > kMaxOrder) {
    raise(ErrorKind::InvalidOrder, "n-gram order must be in [" + std::to_string(kMinOrder) + "," +
                                       std::to_string(kMaxOrder) + "], got " +
                                       std::to_string(p.order));
  }
  if (kind == ScorerKind::NgramKN && !(p.discount > 0.0 && p.discount < 1.0)) {
    raise(ErrorKind::InvalidArgument, "Kneser-Ney discount must be in (0,1)");
  }
}

std::string ScorerSpec::id() const {
  if (kind == ScorerKind::External) {
    return "external-" + std::to_string(external_params().epochs) + "-epochs";
  }
  std::string s = std::to_string(ngram_params().order) + "-grams";
  if (kind == ScorerKind::NgramMLE) s += "-mle";
  return s;
}

std::string ScorerSpec::canonical_json() const {
  nlohmann::ordered_json j;
  j["kind"] = to_string(kind);
  if (kind == ScorerKind::External) {
    const auto& p = external_params();
    j["command"] = p.command;
    j["epochs"] = p.epochs;
    j["block_size"] = p.block_size;
    j["window"] = p.window;
    j["seed"] = p.seed;
  } else {
    const auto& p = ngram_params();
    j["order"] = p.order;
    if (kind == ScorerKind::NgramKN) j["discount"] = p.discount;
  }
  return j.dump();
}

std::unique_ptr<Scorer> fit(const ScorerSpec& spec,
                            std::span<const Transcript* const> training_texts,
                            std::shared_ptr<const Vocabulary> vocab) {
  spec.validate();
  if (training_texts.empty()) raise(ErrorKind::EmptyInput, "no training transcripts");

  if (spec.kind == ScorerKind::External) {
    std::vector<TokenText> texts;
    texts.reserve(training_texts.size());
    for (const auto* t : training_texts) texts.push_back(flatten(t->utterances));
    auto scorer = std::make_unique<ExternalScorer>(spec.external_params(), spec.id());
    scorer->train(texts, spec.external_params());
    return scorer;
  }

  std::vector<Utterance> utterances;
  for (const auto* t : training_texts) {
    utterances.insert(utterances.end(), t->utterances.begin(), t->utterances.end());
  }
  const auto& p = spec.ngram_params();
  NgramConfig config;
  config.order = p.order;
  config.discount = p.discount;
  config.estimator = spec.kind == ScorerKind::NgramMLE ? Estimator::MLE : Estimator::KneserNey;
  return std::make_unique<NgramScorer>(NgramModel::train(config, utterances, std::move(vocab)),
                                       spec.id());
}

std::unique_ptr<Scorer> fit(const ScorerSpec& spec, std::span<const Transcript> training_texts,
                            std::shared_ptr<const Vocabulary> vocab) {
  std::vector<const Transcript*> ptrs;
  ptrs.reserve(training_texts.size());
  for (const auto& t : training_texts) ptrs.push_back(&t);
  return fit(spec, std::span<const Transcript* const>(ptrs), std::move(vocab));
}

}  // namespace pplmark
