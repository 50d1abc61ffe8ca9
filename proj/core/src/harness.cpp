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

#include "pplmark/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "pplmark/corpus_io.hpp"
#include "pplmark/error.hpp"
#include "pplmark/hash.hpp"
#include "pplmark/vocabulary.hpp"

namespace pplmark {
namespace {

struct Target {
  std::size_t profile = 0;
  std::size_t transcript = 0;
};

struct Fold {
  Group group = Group::Control;
  const SubjectRecord* excluded = nullptr;  // nullptr: the whole group
  std::vector<const Transcript*> train;
  std::vector<Target> targets;
  std::vector<PerplexityScore> scores;  // aligned with targets

  std::string label() const {
    return std::string(to_string(group)) + "__" + (excluded ? excluded->subject_id : "ALL");
  }
};

std::string fold_cache_json(const Fold& fold, const std::vector<SubjectProfile>& profiles) {
  nlohmann::ordered_json doc;
  doc["fold"] = fold.label();
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < fold.targets.size(); ++i) {
    const auto& t = fold.targets[i];
    const auto& p = profiles[t.profile];
    rows.push_back({{"subject_id", p.subject_id},
                    {"session_id", p.transcripts[t.transcript].session_id},
                    {"ppl", fold.scores[i].value},
                    {"k", fold.scores[i].token_count}});
  }
  doc["scores"] = std::move(rows);
  return doc.dump(1) + "\n";
}

// Returns false when the cached file does not describe exactly this fold.
bool load_fold_cache(const std::filesystem::path& path, Fold& fold,
                     const std::vector<SubjectProfile>& profiles, const std::string& scorer_id) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) return false;
  try {
    auto doc = nlohmann::json::parse(read_file(path));
    if (doc.at("fold").get<std::string>() != fold.label()) return false;
    const auto& rows = doc.at("scores");
    if (rows.size() != fold.targets.size()) return false;
    std::vector<PerplexityScore> scores;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& t = fold.targets[i];
      const auto& p = profiles[t.profile];
      if (rows[i].at("subject_id").get<std::string>() != p.subject_id ||
          rows[i].at("session_id").get<std::string>() != p.transcripts[t.transcript].session_id) {
        return false;
      }
      PerplexityScore s{rows[i].at("ppl").get<double>(), rows[i].at("k").get<std::size_t>(),
                        scorer_id};
      if (!std::isfinite(s.value) || !(s.value > 0)) return false;
      scores.push_back(std::move(s));
    }
    fold.scores = std::move(scores);
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

double mean_of(std::span<const SubjectProfile* const> xs, double SubjectProfile::*field) {
  double sum = 0;
  for (const auto* p : xs) sum += p->*field;
  return sum / static_cast<double>(xs.size());
}

double sigma_of(std::span<const SubjectProfile* const> xs, double mean, SigmaForm form) {
  double ss = 0;
  for (const auto* p : xs) {
    const double dev = p->d - mean;
    ss += dev * dev;
  }
  const double n = static_cast<double>(xs.size());
  return std::sqrt(ss / (form == SigmaForm::Sample ? n - 1 : n));
}

Prediction nearest(const SubjectProfile& profile, Rule rule, double target_c, double target_ad,
                   TiePolicy tie) {
  const double dist_c = std::fabs(profile.d - target_c);
  const double dist_ad = std::fabs(profile.d - target_ad);
  Prediction p{profile.subject_id, rule, Group::Control, dist_c - dist_ad};
  if (dist_ad < dist_c) p.predicted = Group::AD;
  else if (dist_ad == dist_c) p.predicted = tie == TiePolicy::AD ? Group::AD : Group::Control;
  return p;
}

}  // namespace

std::string_view to_string(Rule rule) {
  switch (rule) {
    case Rule::PbarC: return "Pbar_C";
    case Rule::PbarAD: return "Pbar_AD";
    case Rule::Dbar: return "Dbar";
    case Rule::Dstar: return "Dstar";
  }
  return "?";
}

std::string_view to_string(SigmaForm form) {
  return form == SigmaForm::Population ? "population" : "sample";
}

std::optional<SigmaForm> parse_sigma_form(std::string_view text) {
  if (text == "population") return SigmaForm::Population;
  if (text == "sample") return SigmaForm::Sample;
  return std::nullopt;
}

std::optional<TiePolicy> parse_tie_policy(std::string_view text) {
  if (auto g = parse_group(text)) return *g == Group::AD ? TiePolicy::AD : TiePolicy::Control;
  return std::nullopt;
}

void summarize(SubjectProfile& profile) {
  if (profile.transcripts.empty()) {
    raise(ErrorKind::InvalidArgument, "subject '" + profile.subject_id + "' has no scores");
  }
  double sc = 0;
  double sa = 0;
  for (const auto& t : profile.transcripts) {
    sc += t.p_c;
    sa += t.p_ad;
  }
  const double n = static_cast<double>(profile.transcripts.size());
  profile.pbar_c = sc / n;
  profile.pbar_ad = sa / n;
  profile.d = profile.pbar_ad - profile.pbar_c;
}

std::vector<SubjectProfile> run_loso(const Corpus& corpus, const ScorerSpec& spec,
                                     const LosoOptions& options) {
  spec.validate();
  for (Group g : kGroups) {
    if (corpus.subject_count(g) < 2) {
      raise(ErrorKind::InsufficientGroup,
            std::string(to_string(g)) + " group has " + std::to_string(corpus.subject_count(g)) +
                " subject(s); leave-one-subject-out needs at least 2");
    }
  }
  for (const auto& s : corpus.subjects) {
    if (s.transcripts.size() < 2) {
      raise(ErrorKind::InvalidArgument,
            "subject '" + s.subject_id + "' has " + std::to_string(s.transcripts.size()) +
                " transcript(s); filter the corpus to multi-interview subjects first");
    }
  }

  auto vocab = std::make_shared<const Vocabulary>(Vocabulary::build(corpus));

  std::vector<SubjectProfile> profiles;
  profiles.reserve(corpus.subjects.size());
  for (const auto& s : corpus.subjects) {
    SubjectProfile p;
    p.subject_id = s.subject_id;
    p.group = s.group;
    for (const auto& t : s.transcripts) p.transcripts.push_back({t.session_id, 0, 0, 0});
    profiles.push_back(std::move(p));
  }

  // Two whole-group folds, then one fold per subject with that subject removed.
  std::vector<Fold> folds;
  for (Group g : kGroups) {
    Fold f;
    f.group = g;
    for (std::size_t i = 0; i < corpus.subjects.size(); ++i) {
      const auto& s = corpus.subjects[i];
      if (s.group == g) {
        for (const auto& t : s.transcripts) f.train.push_back(&t);
      } else {
        for (std::size_t j = 0; j < s.transcripts.size(); ++j) f.targets.push_back({i, j});
      }
    }
    folds.push_back(std::move(f));
  }
  for (std::size_t i = 0; i < corpus.subjects.size(); ++i) {
    const auto& held = corpus.subjects[i];
    Fold f;
    f.group = held.group;
    f.excluded = &held;
    for (const auto& s : corpus.subjects) {
      if (s.group != held.group || &s == &held) continue;
      for (const auto& t : s.transcripts) f.train.push_back(&t);
    }
    for (std::size_t j = 0; j < held.transcripts.size(); ++j) f.targets.push_back({i, j});
    folds.push_back(std::move(f));
  }

  std::optional<std::filesystem::path> cache;
  if (options.cache_dir) {
    cache = *options.cache_dir / fnv1a_hex(spec.canonical_json() + "\n" + corpus_to_json(corpus));
  }

  std::mutex log_mutex;
  auto log = [&](const std::string& msg) {
    if (!options.log) return;
    std::lock_guard lock(log_mutex);
    options.log(msg);
  };

  const std::string scorer_id = spec.id();
  std::vector<std::exception_ptr> failures(folds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < folds.size();) {
      Fold& fold = folds[i];
      try {
        std::filesystem::path cached;
        if (cache) {
          cached = *cache / (fold.label() + ".json");
          if (load_fold_cache(cached, fold, profiles, scorer_id)) {
            log("fold " + fold.label() + ": cached");
            continue;
          }
        }
        auto scorer = fit(spec, fold.train, vocab);
        fold.scores.clear();
        for (const auto& t : fold.targets) {
          const auto& tr = corpus.subjects[t.profile].transcripts[t.transcript];
          fold.scores.push_back(scorer->score(tr.utterances));
        }
        if (cache) write_file_atomic(cached, fold_cache_json(fold, profiles));
        log("fold " + fold.label() + ": trained on " + std::to_string(fold.train.size()) +
            " transcripts, scored " + std::to_string(fold.targets.size()));
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };

  const unsigned workers = std::clamp<unsigned>(options.workers, 1,
                                                static_cast<unsigned>(folds.size()));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  for (std::size_t i = 0; i < folds.size(); ++i) {
    if (!failures[i]) continue;
    try {
      std::rethrow_exception(failures[i]);
    } catch (const Error& e) {
      raise(e.kind(), "fold " + folds[i].label() + ": " + e.what());
    } catch (const std::exception& e) {
      raise(ErrorKind::ScoringFailure, "fold " + folds[i].label() + ": " + e.what());
    }
  }

  for (const auto& fold : folds) {
    for (std::size_t i = 0; i < fold.targets.size(); ++i) {
      auto& ts = profiles[fold.targets[i].profile].transcripts[fold.targets[i].transcript];
      if (fold.group == Group::Control) {
        ts.p_c = fold.scores[i].value;
        ts.tokens = fold.scores[i].token_count;
      } else {
        ts.p_ad = fold.scores[i].value;
      }
    }
  }
  for (auto& p : profiles) summarize(p);
  return profiles;
}

ThresholdSet aggregate_thresholds(std::span<const SubjectProfile* const> controls,
                                  std::span<const SubjectProfile* const> ad,
                                  const ThresholdOptions& options) {
  if (options.k_sigma < 0 || options.k_sigma > kMaxSigmaMultiplier) {
    raise(ErrorKind::InvalidArgument, "k_sigma must be in [0," +
                                          std::to_string(kMaxSigmaMultiplier) + "], got " +
                                          std::to_string(options.k_sigma));
  }
  const std::size_t min_n = options.sigma_form == SigmaForm::Sample ? 2 : 1;
  if (controls.size() < min_n || ad.size() < min_n) {
    raise(ErrorKind::DegenerateGroup,
          "threshold group too small (" + std::to_string(controls.size()) + " control, " +
              std::to_string(ad.size()) + " AD)");
  }
  ThresholdSet t;
  t.theta_c = mean_of(controls, &SubjectProfile::pbar_c);
  t.theta_ad = mean_of(ad, &SubjectProfile::pbar_ad);
  t.dbar_c = mean_of(controls, &SubjectProfile::d);
  t.dbar_ad = mean_of(ad, &SubjectProfile::d);
  t.sigma_c = sigma_of(controls, t.dbar_c, options.sigma_form);
  t.sigma_ad = sigma_of(ad, t.dbar_ad, options.sigma_form);
  t.k_sigma = options.k_sigma;
  t.dstar_c = t.dbar_c - t.k_sigma * t.sigma_c;
  t.dstar_ad = t.dbar_ad + t.k_sigma * t.sigma_ad;
  return t;
}

ThresholdSet build_thresholds(std::span<const SubjectProfile> profiles, std::string_view held_out,
                              const ThresholdOptions& options) {
  std::vector<const SubjectProfile*> controls;
  std::vector<const SubjectProfile*> ad;
  bool found = false;
  for (const auto& p : profiles) {
    if (p.subject_id == held_out) {
      found = true;
      continue;
    }
    (p.group == Group::AD ? ad : controls).push_back(&p);
  }
  if (!found) {
    raise(ErrorKind::InvalidArgument, "held-out subject '" + std::string(held_out) + "' not found");
  }
  return aggregate_thresholds(controls, ad, options);
}

Prediction classify_pbar_c(const SubjectProfile& profile, double theta_c) {
  return {profile.subject_id, Rule::PbarC, profile.pbar_c > theta_c ? Group::AD : Group::Control,
          profile.pbar_c - theta_c};
}

Prediction classify_pbar_ad(const SubjectProfile& profile, double theta_ad) {
  return {profile.subject_id, Rule::PbarAD,
          profile.pbar_ad > theta_ad ? Group::Control : Group::AD, profile.pbar_ad - theta_ad};
}

Prediction classify_dbar(const SubjectProfile& profile, const ThresholdSet& t, TiePolicy tie) {
  return nearest(profile, Rule::Dbar, t.dbar_c, t.dbar_ad, tie);
}

Prediction classify_dstar(const SubjectProfile& profile, const ThresholdSet& t, TiePolicy tie) {
  return nearest(profile, Rule::Dstar, t.dstar_c, t.dstar_ad, tie);
}

Evaluation evaluate_profiles(std::vector<SubjectProfile> profiles, std::string model,
                             const EvaluateOptions& options) {
  Evaluation ev;
  ev.profiles = std::move(profiles);
  ev.report.model = std::move(model);

  std::vector<Labeled> gold;
  std::vector<std::vector<Labeled>> by_rule(std::size(kRules));
  for (const auto& p : ev.profiles) {
    // Unlike the pooled group models, the thresholds are only ever computed
    // with p removed from its own group.
    const ThresholdSet t = build_thresholds(ev.profiles, p.subject_id, options.thresholds);
    const Prediction preds[] = {classify_pbar_c(p, t.theta_c), classify_pbar_ad(p, t.theta_ad),
                                classify_dbar(p, t, options.tie),
                                classify_dstar(p, t, options.tie)};
    for (std::size_t r = 0; r < std::size(preds); ++r) {
      by_rule[r].push_back({p.subject_id, preds[r].predicted});
      ev.predictions.push_back(preds[r]);
    }
    gold.push_back({p.subject_id, p.group});
  }
  for (std::size_t r = 0; r < std::size(kRules); ++r) {
    ev.report.rules.push_back(
        make_rule_report(std::string(to_string(kRules[r])), confusion(by_rule[r], gold)));
  }
  return ev;
}

Evaluation evaluate_all(const Corpus& corpus, const ScorerSpec& spec,
                        const EvaluateOptions& options, const LosoOptions& loso) {
  if (options.thresholds.k_sigma < 0 || options.thresholds.k_sigma > kMaxSigmaMultiplier) {
    raise(ErrorKind::InvalidArgument, "k_sigma must be in [0," +
                                          std::to_string(kMaxSigmaMultiplier) + "]");
  }
  return evaluate_profiles(run_loso(corpus, spec, loso), spec.id(), options);
}

std::string profiles_csv(const Evaluation& evaluation) {
  std::string out =
      "subject_id,group,Pbar_C,Pbar_AD,D,Pbar_C_pred,Pbar_AD_pred,Dbar_pred,Dstar_pred\n";
  const std::size_t nr = std::size(kRules);
  char buf[256];
  for (std::size_t i = 0; i < evaluation.profiles.size(); ++i) {
    const auto& p = evaluation.profiles[i];
    std::snprintf(buf, sizeof buf, ",%s,%.17g,%.17g,%.17g", std::string(to_string(p.group)).c_str(),
                  p.pbar_c, p.pbar_ad, p.d);
    out += p.subject_id;
    out += buf;
    for (std::size_t r = 0; r < nr; ++r) {
      const std::size_t k = i * nr + r;
      out += ',';
      if (k < evaluation.predictions.size()) out += to_string(evaluation.predictions[k].predicted);
    }
    out += '\n';
  }
  return out;
}

}  // namespace pplmark
