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

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "pplmark/error.hpp"
#include "pplmark/harness.hpp"
#include "pplmark/ngram.hpp"
#include "pplmark/vocabulary.hpp"
#include "temp_dir.hpp"

using namespace pplmark;
using pplmark::testing::SyntheticGroup;
using pplmark::testing::synthetic_corpus;

namespace {

const std::vector<std::string> kAbc = {"a", "b", "c"};
const std::vector<std::string> kXyz = {"x", "y", "z"};

SubjectProfile profile(std::string id, Group g, double d, double pbar_c = 10, double pbar_ad = 0) {
  SubjectProfile p;
  p.subject_id = std::move(id);
  p.group = g;
  p.pbar_c = pbar_c;
  p.pbar_ad = pbar_ad == 0 ? pbar_c + d : pbar_ad;
  p.d = d;
  return p;
}

template <class F>
ErrorKind kind_of(F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::IoError;
}

const ScorerSpec kBigram = ScorerSpec::ngram(ScorerKind::NgramKN, 2);

}  // namespace

TEST_CASE("disjoint groups separate under leave-one-subject-out") {
  auto corpus = synthetic_corpus({{Group::Control, 4, 2, kAbc}, {Group::AD, 4, 2, kXyz}}, 1);
  auto profiles = run_loso(corpus, kBigram);
  REQUIRE(profiles.size() == 8);
  for (const auto& p : profiles) {
    const double own = p.group == Group::AD ? p.pbar_ad : p.pbar_c;
    const double other = p.group == Group::AD ? p.pbar_c : p.pbar_ad;
    CHECK(own < other);
    CHECK(p.d == p.pbar_ad - p.pbar_c);
    CHECK(p.transcripts.size() == 2);
  }
}

TEST_CASE("fold models match models trained by hand") {
  auto corpus = synthetic_corpus({{Group::Control, 3, 2, kAbc}, {Group::AD, 3, 3, kXyz}}, 2);
  auto vocab = std::make_shared<const Vocabulary>(Vocabulary::build(corpus));
  auto profiles = run_loso(corpus, kBigram, {.workers = 4});

  auto model_without = [&](Group g, const std::string& excluded) {
    std::vector<Utterance> texts;
    for (const auto& s : corpus.subjects) {
      if (s.group != g || s.subject_id == excluded) continue;
      for (const auto& t : s.transcripts)
        texts.insert(texts.end(), t.utterances.begin(), t.utterances.end());
    }
    return NgramModel::train({2, 0.1, Estimator::KneserNey}, texts, vocab);
  };

  for (std::size_t i = 0; i < corpus.subjects.size(); ++i) {
    const auto& s = corpus.subjects[i];
    const auto lm_c = model_without(Group::Control, s.group == Group::Control ? s.subject_id : "");
    const auto lm_ad = model_without(Group::AD, s.group == Group::AD ? s.subject_id : "");
    double sc = 0, sa = 0;
    for (std::size_t j = 0; j < s.transcripts.size(); ++j) {
      const double pc = perplexity(lm_c, s.transcripts[j].utterances);
      const double pa = perplexity(lm_ad, s.transcripts[j].utterances);
      CHECK(profiles[i].transcripts[j].p_c == pc);
      CHECK(profiles[i].transcripts[j].p_ad == pa);
      sc += pc;
      sa += pa;
    }
    const double n = static_cast<double>(s.transcripts.size());
    CHECK(profiles[i].pbar_c == sc / n);
    CHECK(profiles[i].pbar_ad == sa / n);
  }
}

TEST_CASE("worker count does not change results") {
  auto corpus = synthetic_corpus({{Group::Control, 5, 2, kAbc}, {Group::AD, 5, 2, {"a", "b", "z"}}}, 3);
  const auto serial = run_loso(corpus, ScorerSpec::ngram(ScorerKind::NgramKN, 3));
  const auto parallel =
      run_loso(corpus, ScorerSpec::ngram(ScorerKind::NgramKN, 3), {.workers = 8});
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(serial[i].pbar_c == parallel[i].pbar_c);
    CHECK(serial[i].pbar_ad == parallel[i].pbar_ad);
  }
}

TEST_CASE("fold cache is reused and tolerates damage") {
  pplmark::testing::TempDir dir;
  auto corpus = synthetic_corpus({{Group::Control, 3, 2, kAbc}, {Group::AD, 3, 2, kXyz}}, 4);
  std::vector<std::string> log;
  LosoOptions o;
  o.cache_dir = dir.path();
  o.log = [&](const std::string& l) { log.push_back(l); };
  const auto first = run_loso(corpus, kBigram, o);
  CHECK(log.size() == 8);

  std::size_t files = 0;
  std::filesystem::path some;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir.path())) {
    if (e.is_regular_file()) {
      ++files;
      some = e.path();
    }
  }
  CHECK(files == 8);

  log.clear();
  const auto second = run_loso(corpus, kBigram, o);
  std::size_t cached = 0;
  for (const auto& l : log) cached += l.find("cached") != std::string::npos;
  CHECK(cached == 8);
  for (std::size_t i = 0; i < first.size(); ++i) CHECK(first[i].d == second[i].d);

  pplmark::testing::TempDir scratch;
  scratch.write("x", "{ truncated");
  std::filesystem::copy_file(scratch.path() / "x", some,
                             std::filesystem::copy_options::overwrite_existing);
  log.clear();
  const auto third = run_loso(corpus, kBigram, o);
  cached = 0;
  for (const auto& l : log) cached += l.find("cached") != std::string::npos;
  CHECK(cached == 7);
  for (std::size_t i = 0; i < first.size(); ++i) CHECK(first[i].d == third[i].d);

  // A different spec lands in a different cache key.
  log.clear();
  run_loso(corpus, ScorerSpec::ngram(ScorerKind::NgramKN, 3), o);
  for (const auto& l : log) CHECK(l.find("cached") == std::string::npos);
}

TEST_CASE("loso preconditions") {
  auto one_ad = synthetic_corpus({{Group::Control, 3, 2, kAbc}, {Group::AD, 1, 2, kXyz}}, 1);
  CHECK(kind_of([&] { run_loso(one_ad, kBigram); }) == ErrorKind::InsufficientGroup);
  auto single = synthetic_corpus({{Group::Control, 2, 1, kAbc}, {Group::AD, 2, 2, kXyz}}, 1);
  CHECK(kind_of([&] { run_loso(single, kBigram); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("scorer errors carry the fold identity") {
  auto corpus = synthetic_corpus({{Group::Control, 2, 2, kAbc}, {Group::AD, 2, 2, kXyz}}, 1);
  try {
    run_loso(corpus, ScorerSpec::ngram(ScorerKind::NgramMLE, 2));
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InfinitePerplexity);
    CHECK(std::string(e.what()).find("fold Control__ALL") != std::string::npos);
  }
}

TEST_CASE("external scorers share the control flow") {
  auto corpus = synthetic_corpus({{Group::Control, 3, 2, kAbc}, {Group::AD, 3, 2, kXyz}}, 5);
  ExternalScorerParams p;
  p.command = {PPLMARK_STUB_SIDECAR, "overlap"};
  auto ev = evaluate_all(corpus, ScorerSpec::external(p), {}, {.workers = 3});
  CHECK(ev.report.model == "external-0-epochs");
  for (const auto& r : ev.report.rules) {
    if (r.rule == "Dbar" || r.rule == "Dstar") CHECK(r.accuracy == 1.0);
  }
  p.command = {PPLMARK_STUB_SIDECAR, "crash"};
  CHECK(kind_of([&] { run_loso(corpus, ScorerSpec::external(p)); }) == ErrorKind::ScorerCrashed);
}

TEST_CASE("thresholds exclude the held-out subject from its own group only") {
  std::vector<SubjectProfile> ps = {profile("c1", Group::Control, 2), profile("c2", Group::Control, 4),
                                    profile("a1", Group::AD, -2), profile("a2", Group::AD, 0)};
  auto t = build_thresholds(ps, "a1");
  CHECK(t.dbar_c == 3.0);
  CHECK(t.dbar_ad == 0.0);
  CHECK(t.sigma_ad == 0.0);
  CHECK(t.sigma_c == 1.0);
  CHECK(t.k_sigma == 2);
  CHECK(t.dstar_c == 1.0);
  CHECK(t.dstar_ad == 0.0);

  auto z = build_thresholds(ps, "a1", {0});
  CHECK(z.dstar_c == z.dbar_c);
  CHECK(z.dstar_ad == z.dbar_ad);

  auto wider = ps;
  wider.push_back(profile("c3", Group::Control, 6));
  auto s = build_thresholds(wider, "c1", {1, SigmaForm::Sample});
  CHECK(s.sigma_ad == doctest::Approx(std::sqrt(2.0)));
  CHECK(s.sigma_c == doctest::Approx(std::sqrt(2.0)));
  CHECK(kind_of([&] { build_thresholds(ps, "c1", {1, SigmaForm::Sample}).sigma_c; }) ==
        ErrorKind::DegenerateGroup);
  CHECK(kind_of([&] { build_thresholds(ps, "nobody"); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([&] { build_thresholds(ps, "a1", {4}); }) == ErrorKind::InvalidArgument);

  std::vector<SubjectProfile> lone = {profile("c1", Group::Control, 2), profile("a1", Group::AD, 1),
                                      profile("a2", Group::AD, 3)};
  CHECK(kind_of([&] { build_thresholds(lone, "c1"); }) == ErrorKind::DegenerateGroup);
}

TEST_CASE("threshold rules") {
  auto p = profile("s", Group::AD, 0, 11, 20);
  CHECK(classify_pbar_c(p, 10).predicted == Group::AD);
  CHECK(classify_pbar_c(p, 10).margin == 1.0);
  CHECK(classify_pbar_c(p, 11).predicted == Group::Control);
  CHECK(classify_pbar_ad(p, 19).predicted == Group::Control);
  CHECK(classify_pbar_ad(p, 20).predicted == Group::AD);
  CHECK(classify_pbar_ad(p, 21).predicted == Group::AD);
  CHECK(classify_pbar_ad(p, 19).rule == Rule::PbarAD);
}

TEST_CASE("distance rules") {
  ThresholdSet t;
  t.dbar_c = -3;
  t.dbar_ad = 10;
  auto p = profile("s", Group::Control, 5);
  auto pr = classify_dbar(p, t);
  CHECK(pr.predicted == Group::AD);
  CHECK(pr.margin == 8.0 - 5.0);

  t.dbar_c = 0;
  t.dbar_ad = 10;
  CHECK(classify_dbar(p, t).predicted == Group::AD);
  CHECK(classify_dbar(p, t, TiePolicy::Control).predicted == Group::Control);

  // Zero spread: the shifted rule equals the plain one.
  t.dstar_c = t.dbar_c;
  t.dstar_ad = t.dbar_ad;
  for (double d : {-5.0, 0.0, 4.9, 5.0, 5.1, 20.0}) {
    auto q = profile("q", Group::AD, d);
    CHECK(classify_dstar(q, t).predicted == classify_dbar(q, t).predicted);
  }

  // D exactly on the shifted AD mean.
  ThresholdSet s;
  s.dbar_c = 0;
  s.sigma_c = 1;
  s.dbar_ad = -10;
  s.sigma_ad = 2;
  s.k_sigma = 2;
  s.dstar_c = -2;
  s.dstar_ad = -6;
  auto on = profile("on", Group::AD, -6);
  auto r = classify_dstar(on, s);
  CHECK(r.predicted == Group::AD);
  CHECK(r.margin == 4.0);
  CHECK(classify_dbar(on, s).predicted == Group::AD);
  CHECK(classify_dbar(on, s).margin == 2.0);
}

TEST_CASE("label symmetry") {
  std::mt19937_64 rng(8);
  auto ps = pplmark::testing::random_profiles(5, 6, rng);
  auto flipped = ps;
  for (auto& p : flipped) {
    p.group = other(p.group);
    p.d = -p.d;
  }
  for (std::size_t i = 0; i < ps.size(); ++i) {
    auto t = build_thresholds(ps, ps[i].subject_id);
    auto f = build_thresholds(flipped, ps[i].subject_id);
    // Flipping labels swaps the roles of the two means.
    ThresholdSet g = f;
    std::swap(g.dbar_c, g.dbar_ad);
    CHECK(g.dbar_c == doctest::Approx(-t.dbar_c));
    auto a = classify_dbar(ps[i], t).predicted;
    auto b = classify_dbar(flipped[i], f).predicted;
    CHECK(b == other(a));
  }
}

TEST_CASE("evaluate_all on a disjoint corpus") {
  auto corpus = synthetic_corpus({{Group::Control, 4, 3, kAbc}, {Group::AD, 4, 3, kXyz}}, 9);
  auto ev = evaluate_all(corpus, kBigram);
  REQUIRE(ev.report.rules.size() == 4);
  CHECK(ev.report.rules[0].rule == "Pbar_C");
  CHECK(ev.report.rules[1].rule == "Pbar_AD");
  CHECK(ev.report.rules[2].rule == "Dbar");
  CHECK(ev.report.rules[3].rule == "Dstar");
  CHECK(ev.report.rules[2].accuracy == 1.0);
  CHECK(ev.report.rules[3].accuracy == 1.0);
  CHECK(ev.predictions.size() == 4 * ev.profiles.size());

  auto again = evaluate_all(corpus, kBigram);
  CHECK(profiles_csv(again) == profiles_csv(ev));
  const std::string csv = profiles_csv(ev);
  CHECK(csv.rfind("subject_id,group,Pbar_C,Pbar_AD,D,", 0) == 0);
  CHECK(kind_of([&] { evaluate_all(corpus, kBigram, {{7}}); }) == ErrorKind::InvalidArgument);
}
