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

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <thread>

#include "pplmark/harness.hpp"
#include "pplmark/ngram.hpp"
#include "pplmark/vocabulary.hpp"

using namespace pplmark;

namespace {

// Roughly the shape of the cookie-theft data: a few hundred transcripts of
// short utterances over a Zipf-distributed vocabulary.
Corpus zipf_corpus(std::size_t subjects_per_group, std::size_t transcripts,
                   std::size_t vocab_size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> weights(vocab_size);
  for (std::size_t i = 0; i < vocab_size; ++i) weights[i] = 1.0 / static_cast<double>(i + 1);
  std::discrete_distribution<std::size_t> word(weights.begin(), weights.end());
  std::uniform_int_distribution<std::size_t> len(2, 14);
  Corpus c;
  for (Group g : kGroups) {
    for (std::size_t s = 0; s < subjects_per_group; ++s) {
      SubjectRecord rec;
      rec.subject_id = std::string(g == Group::AD ? "A" : "C") + std::to_string(s);
      rec.group = g;
      for (std::size_t t = 0; t < transcripts; ++t) {
        Transcript tr{rec.subject_id, std::to_string(t), g, {}};
        for (int u = 0; u < 14; ++u) {
          Utterance utt(len(rng));
          for (auto& w : utt) w = "w" + std::to_string(word(rng));
          tr.utterances.push_back(std::move(utt));
        }
        rec.transcripts.push_back(std::move(tr));
      }
      c.subjects.push_back(std::move(rec));
    }
  }
  c.sort();
  return c;
}

std::vector<Utterance> flatten(const Corpus& c) {
  std::vector<Utterance> out;
  for (const auto& s : c.subjects)
    for (const auto& t : s.transcripts) out.insert(out.end(), t.utterances.begin(), t.utterances.end());
  return out;
}

void BM_Train(benchmark::State& state) {
  const auto corpus = zipf_corpus(75, 3, 1500, 1);
  const auto texts = flatten(corpus);
  auto vocab = std::make_shared<const Vocabulary>(Vocabulary::build(texts));
  const int order = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto m = NgramModel::train({order, 0.1, Estimator::KneserNey}, texts, vocab);
    benchmark::DoNotOptimize(m);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(texts.size()));
}
BENCHMARK(BM_Train)->DenseRange(2, 5)->Unit(benchmark::kMillisecond);

void BM_Score(benchmark::State& state) {
  const auto corpus = zipf_corpus(75, 3, 1500, 1);
  const auto texts = flatten(corpus);
  auto vocab = std::make_shared<const Vocabulary>(Vocabulary::build(texts));
  const int order = static_cast<int>(state.range(0));
  auto m = NgramModel::train({order, 0.1, Estimator::KneserNey}, texts, vocab);
  const auto& probe = corpus.subjects.front().transcripts.front().utterances;
  for (auto _ : state) benchmark::DoNotOptimize(perplexity(m, probe));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(probe.size()));
}
BENCHMARK(BM_Score)->DenseRange(2, 5);

void BM_Loso(benchmark::State& state) {
  const auto corpus = zipf_corpus(75, 3, 1500, 2);
  const auto spec = ScorerSpec::ngram(ScorerKind::NgramKN, 2);
  LosoOptions opts;
  opts.workers = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(run_loso(corpus, spec, opts));
}
BENCHMARK(BM_Loso)
    ->Arg(1)
    ->Arg(static_cast<int>(std::max(2u, std::thread::hardware_concurrency())))
    ->Unit(benchmark::kSecond)
    ->Iterations(1);

}  // namespace

BENCHMARK_MAIN();
