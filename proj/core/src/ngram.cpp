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

#include "pplmark/ngram.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "pplmark/error.hpp"
#include "pplmark/hash.hpp"

namespace pplmark {
namespace {

constexpr std::string_view kModelFormat = "pplmark-ngram";
constexpr int kModelVersion = 1;

void check_order(int order) {
  if (order < kMinOrder || order > kMaxOrder) {
    raise(ErrorKind::InvalidOrder, "n-gram order must be in [2,5], got " + std::to_string(order));
  }
}

// Neumaier-compensated sum in extended precision. With it the uniform model
// reproduces PPL = |V| exactly after rounding back to double.
class LogAccumulator {
 public:
  void add(long double x) {
    if (!std::isfinite(x)) {
      special_ += x;
      return;
    }
    long double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  long double value() const { return special_ != 0 ? special_ : sum_ + comp_; }

 private:
  long double special_ = 0;  // accumulates -inf from zero probabilities
  long double sum_ = 0;
  long double comp_ = 0;
};

std::vector<WordId> padded_ids(const Utterance& u, int order, const Vocabulary& vocab,
                               ErrorKind unknown_kind) {
  std::vector<WordId> ids(static_cast<std::size_t>(order - 1), Vocabulary::kStartId);
  ids.reserve(ids.size() + u.size() + 1);
  for (const auto& w : u) {
    auto id = vocab.find(w);
    if (!id) {
      raise(unknown_kind, unknown_kind == ErrorKind::UnknownWord
                              ? "unknown word '" + w + "'"
                              : "training token '" + w + "' is not in the closed vocabulary");
    }
    ids.push_back(*id);
  }
  ids.push_back(Vocabulary::kEndId);
  return ids;
}

}  // namespace

std::string_view to_string(Estimator estimator) {
  return estimator == Estimator::MLE ? "mle" : "kneser-ney";
}

ContextKey ContextKey::of(std::span<const WordId> ids) {
  ContextKey key;
  key.size = static_cast<std::uint8_t>(ids.size());
  std::copy(ids.begin(), ids.end(), key.ids.begin());
  return key;
}

std::size_t ContextKeyHash::operator()(const ContextKey& key) const noexcept {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ key.size;
  for (std::uint8_t i = 0; i < key.size; ++i) {
    h ^= key.ids[i] + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return static_cast<std::size_t>(h);
}

// ---------------------------------------------------------------------------
// NgramCounts

NgramCounts::NgramCounts(int order) : order_(order) {
  check_order(order);
  raw_.resize(static_cast<std::size_t>(order));
  cont_.resize(static_cast<std::size_t>(order - 1));
}

NgramCounts NgramCounts::from_texts(int order, std::span<const Utterance> texts,
                                    const Vocabulary& vocab) {
  check_order(order);
  if (texts.empty()) raise(ErrorKind::EmptyInput, "no training texts");
  NgramCounts counts(order);
  const auto n = static_cast<std::size_t>(order);
  for (const auto& u : texts) {
    auto ids = padded_ids(u, order, vocab, ErrorKind::OutOfVocabularyTraining);
    for (std::size_t i = n - 1; i < ids.size(); ++i) {
      for (std::size_t k = 1; k <= n; ++k) {
        std::span<const WordId> gram(ids.data() + i + 1 - k, k);
        counts.add(gram, 1);
      }
    }
  }
  counts.rebuild_continuations();
  return counts;
}

void NgramCounts::add(std::span<const WordId> ngram, std::uint64_t count) {
  if (ngram.empty() || ngram.size() > static_cast<std::size_t>(order_)) {
    raise(ErrorKind::InvalidArgument, "n-gram size out of range");
  }
  auto& row = raw_[ngram.size() - 1][ContextKey::of(ngram.first(ngram.size() - 1))];
  row.next[ngram.back()] += count;
  row.total += count;
}

void NgramCounts::rebuild_continuations() {
  for (auto& level : cont_) level.clear();
  // Each distinct (k+1)-gram (v, h, w) adds one left neighbour to (h, w).
  for (std::size_t k = 1; k < static_cast<std::size_t>(order_); ++k) {
    auto& target = cont_[k - 1];
    for (const auto& [key, row] : raw_[k]) {
      ContextKey shorter = ContextKey::of(key.view().subspan(1));
      auto& dst = target[shorter];
      for (const auto& [w, c] : row.next) {
        if (c == 0) continue;
        dst.next[w] += 1;
        dst.total += 1;
      }
    }
  }
}

std::uint64_t NgramCounts::count(std::span<const WordId> ngram) const {
  if (ngram.empty() || ngram.size() > static_cast<std::size_t>(order_)) return 0;
  const auto* row = raw_row(ngram.first(ngram.size() - 1));
  return row ? row->count(ngram.back()) : 0;
}

std::uint64_t NgramCounts::context_total(std::span<const WordId> context) const {
  const auto* row = raw_row(context);
  return row ? row->total : 0;
}

std::uint64_t NgramCounts::continuation_count(std::span<const WordId> ngram) const {
  if (ngram.empty() || ngram.size() >= static_cast<std::size_t>(order_)) return 0;
  const auto* row = continuation_row(ngram.first(ngram.size() - 1));
  return row ? row->count(ngram.back()) : 0;
}

const ContextRow* NgramCounts::raw_row(std::span<const WordId> context) const {
  if (context.size() >= static_cast<std::size_t>(order_)) return nullptr;
  const auto& level = raw_[context.size()];
  auto it = level.find(ContextKey::of(context));
  return it == level.end() ? nullptr : &it->second;
}

const ContextRow* NgramCounts::continuation_row(std::span<const WordId> context) const {
  if (context.size() + 1 >= static_cast<std::size_t>(order_)) return nullptr;
  const auto& level = cont_[context.size()];
  auto it = level.find(ContextKey::of(context));
  return it == level.end() ? nullptr : &it->second;
}

void NgramCounts::for_each(
    int size, const std::function<void(std::span<const WordId>, std::uint64_t)>& fn) const {
  if (size < 1 || size > order_) return;
  std::vector<std::vector<WordId>> grams;
  std::vector<std::uint64_t> values;
  for (const auto& [key, row] : raw_[static_cast<std::size_t>(size - 1)]) {
    for (const auto& [w, c] : row.next) {
      std::vector<WordId> g(key.view().begin(), key.view().end());
      g.push_back(w);
      grams.push_back(std::move(g));
      values.push_back(c);
    }
  }
  std::vector<std::size_t> order(grams.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return grams[a] < grams[b]; });
  for (std::size_t i : order) fn(grams[i], values[i]);
}

bool operator==(const NgramCounts& a, const NgramCounts& b) {
  if (a.order_ != b.order_) return false;
  auto same = [](const NgramCounts::Level& x, const NgramCounts::Level& y) {
    if (x.size() != y.size()) return false;
    for (const auto& [key, row] : x) {
      auto it = y.find(key);
      if (it == y.end() || it->second.total != row.total || it->second.next != row.next) {
        return false;
      }
    }
    return true;
  };
  for (std::size_t k = 0; k < a.raw_.size(); ++k) {
    if (!same(a.raw_[k], b.raw_[k])) return false;
  }
  for (std::size_t k = 0; k < a.cont_.size(); ++k) {
    if (!same(a.cont_[k], b.cont_[k])) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// NgramModel

NgramModel::NgramModel(NgramCounts counts, double discount, Estimator estimator,
                       std::shared_ptr<const Vocabulary> vocab)
    : counts_(std::move(counts)),
      discount_(discount),
      estimator_(estimator),
      vocab_(std::move(vocab)) {}

NgramModel NgramModel::train(const NgramConfig& config, std::span<const Utterance> texts,
                             std::shared_ptr<const Vocabulary> vocab) {
  check_order(config.order);
  if (!vocab) raise(ErrorKind::InvalidArgument, "training requires a vocabulary");
  if (config.estimator == Estimator::KneserNey &&
      !(config.discount > 0.0 && config.discount < 1.0)) {
    raise(ErrorKind::InvalidArgument, "Kneser-Ney discount must lie in (0,1)");
  }
  auto counts = NgramCounts::from_texts(config.order, texts, *vocab);
  return NgramModel(std::move(counts), config.discount, config.estimator, std::move(vocab));
}

NgramModel NgramModel::uniform(int order, std::shared_ptr<const Vocabulary> vocab) {
  if (!vocab) raise(ErrorKind::InvalidArgument, "uniform model requires a vocabulary");
  return NgramModel(NgramCounts(order), 0.1, Estimator::KneserNey, std::move(vocab));
}

long double NgramModel::prob_ld(WordId word, std::span<const WordId> context) const {
  if (estimator_ == Estimator::MLE) {
    const auto* row = counts_.raw_row(context);
    if (!row || row->total == 0) return 0.0L;
    return static_cast<long double>(row->count(word)) / static_cast<long double>(row->total);
  }

  // Iterate from the unigram level upward; level m uses the last m history
  // tokens.
  const long double d = discount_;
  long double p = 1.0L / static_cast<long double>(vocab_->size());
  const auto n = context.size();
  for (std::size_t m = 0; m <= n; ++m) {
    auto history = context.subspan(n - m);
    const ContextRow* row =
        (m == n) ? counts_.raw_row(history) : counts_.continuation_row(history);
    if (!row || row->total == 0) continue;
    const auto c = static_cast<long double>(row->count(word));
    const auto distinct = static_cast<long double>(row->next.size());
    p = (std::max(c - d, 0.0L) + d * distinct * p) / static_cast<long double>(row->total);
  }
  return p;
}

double NgramModel::prob(WordId word, std::span<const WordId> context) const {
  if (context.size() + 1 != static_cast<std::size_t>(order())) {
    raise(ErrorKind::InvalidArgument, "context must hold order-1 tokens");
  }
  auto check = [&](WordId id) {
    if (id >= vocab_->size()) raise(ErrorKind::UnknownWord, "word id out of vocabulary");
  };
  check(word);
  for (WordId id : context) check(id);
  return static_cast<double>(prob_ld(word, context));
}

double NgramModel::prob(std::string_view word, std::span<const std::string> context) const {
  std::vector<WordId> ctx;
  ctx.reserve(context.size());
  for (const auto& t : context) ctx.push_back(vocab_->id(t));
  return prob(vocab_->id(word), ctx);
}

NgramModel::ExactScore NgramModel::score_exact(std::span<const Utterance> utterances) const {
  const auto n = static_cast<std::size_t>(order());
  LogAccumulator acc;
  std::size_t positions = 0;
  for (const auto& u : utterances) {
    auto ids = padded_ids(u, order(), *vocab_, ErrorKind::UnknownWord);
    for (std::size_t i = n - 1; i < ids.size(); ++i) {
      std::span<const WordId> history(ids.data() + i + 1 - n, n - 1);
      acc.add(std::log(prob_ld(ids[i], history)));
      ++positions;
    }
  }
  return {acc.value(), positions};
}

ScoreSummary NgramModel::score(std::span<const Utterance> utterances) const {
  auto exact = score_exact(utterances);
  return {static_cast<double>(exact.logprob), exact.positions};
}

double sequence_logprob(const NgramModel& model, std::span<const Utterance> utterances) {
  return model.score(utterances).logprob;
}

double perplexity(const NgramModel& model, std::span<const Utterance> utterances) {
  auto exact = model.score_exact(utterances);
  if (exact.positions == 0) raise(ErrorKind::ZeroLength, "no predicted positions");
  return static_cast<double>(
      std::exp(-exact.logprob / static_cast<long double>(exact.positions)));
}

std::string NgramModel::to_json() const {
  nlohmann::ordered_json doc;
  doc["format"] = kModelFormat;
  doc["version"] = kModelVersion;
  doc["order"] = order();
  doc["estimator"] = std::string(to_string(estimator_));
  doc["discount"] = discount_;
  doc["vocabulary"] = vocab_->items();
  nlohmann::ordered_json levels = nlohmann::ordered_json::array();
  for (int k = 1; k <= order(); ++k) {
    nlohmann::ordered_json entries = nlohmann::ordered_json::array();
    counts_.for_each(k, [&](std::span<const WordId> gram, std::uint64_t c) {
      nlohmann::ordered_json e(std::vector<std::uint64_t>(gram.begin(), gram.end()));
      e.push_back(c);
      entries.push_back(std::move(e));
    });
    levels.push_back(std::move(entries));
  }
  doc["ngrams"] = std::move(levels);
  return doc.dump() + "\n";
}

NgramModel NgramModel::from_json(std::string_view text) {
  try {
    auto doc = nlohmann::json::parse(text);
    if (doc.at("format").get<std::string>() != kModelFormat) {
      raise(ErrorKind::FormatError, "not a pplmark n-gram model");
    }
    if (doc.at("version").get<int>() != kModelVersion) {
      raise(ErrorKind::FormatError, "unsupported model version");
    }
    const int order = doc.at("order").get<int>();
    const auto est_name = doc.at("estimator").get<std::string>();
    Estimator est;
    if (est_name == to_string(Estimator::MLE)) {
      est = Estimator::MLE;
    } else if (est_name == to_string(Estimator::KneserNey)) {
      est = Estimator::KneserNey;
    } else {
      raise(ErrorKind::FormatError, "unknown estimator '" + est_name + "'");
    }
    const double discount = doc.at("discount").get<double>();
    auto vocab = std::make_shared<const Vocabulary>(
        Vocabulary::from_items(doc.at("vocabulary").get<std::vector<std::string>>()));

    NgramCounts counts(order);
    const auto& levels = doc.at("ngrams");
    if (!levels.is_array() || levels.size() != static_cast<std::size_t>(order)) {
      raise(ErrorKind::FormatError, "model must hold one count table per order");
    }
    for (std::size_t k = 1; k <= levels.size(); ++k) {
      for (const auto& e : levels[k - 1]) {
        auto values = e.get<std::vector<std::uint64_t>>();
        if (values.size() != k + 1) raise(ErrorKind::FormatError, "malformed n-gram entry");
        std::vector<WordId> gram;
        for (std::size_t i = 0; i < k; ++i) {
          if (values[i] >= vocab->size()) raise(ErrorKind::FormatError, "n-gram id out of range");
          gram.push_back(static_cast<WordId>(values[i]));
        }
        counts.add(gram, values[k]);
      }
    }
    counts.rebuild_continuations();
    return NgramModel(std::move(counts), discount, est, std::move(vocab));
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::FormatError, std::string("model JSON: ") + e.what());
  }
}

void save_model(const NgramModel& model, const std::string& path) {
  write_file_atomic(path, model.to_json());
}

NgramModel load_model(const std::string& path) { return NgramModel::from_json(read_file(path)); }

}  // namespace pplmark
