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

// Leave-one-subject-out experiment.
//
// Every subject s gets two perplexities per transcript:
//
//   s in AD:       P_C from LM_C (all controls), P_AD from LM_AD minus s
//   s in Control:  P_C from LM_C minus s,        P_AD from LM_AD (all AD)
//
// P̄_C and P̄_AD are plain means over s's transcripts and D = P̄_AD - P̄_C.
// Thresholds for s are recomputed with s removed from its own group only.

#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pplmark/metrics.hpp"
#include "pplmark/scorer.hpp"
#include "pplmark/types.hpp"

namespace pplmark {

enum class Rule { PbarC, PbarAD, Dbar, Dstar };
inline constexpr Rule kRules[] = {Rule::PbarC, Rule::PbarAD, Rule::Dbar, Rule::Dstar};

// "Pbar_C", "Pbar_AD", "Dbar", "Dstar".
std::string_view to_string(Rule rule);

enum class SigmaForm { Population, Sample };
std::string_view to_string(SigmaForm form);
std::optional<SigmaForm> parse_sigma_form(std::string_view text);

// Winner of an exact tie in the distance rules.
enum class TiePolicy { AD, Control };
std::optional<TiePolicy> parse_tie_policy(std::string_view text);

struct TranscriptScore {
  std::string session_id;
  double p_c = 0;
  double p_ad = 0;
  std::size_t tokens = 0;
};

struct SubjectProfile {
  std::string subject_id;
  Group group = Group::Control;
  std::vector<TranscriptScore> transcripts;
  double pbar_c = 0;
  double pbar_ad = 0;
  double d = 0;  // pbar_ad - pbar_c
};

// Fills pbar_c, pbar_ad and d from the transcript scores.
void summarize(SubjectProfile& profile);

struct LosoOptions {
  unsigned workers = 1;
  // When set, each fold's scores are stored under this directory and reused.
  std::optional<std::filesystem::path> cache_dir;
  std::function<void(const std::string&)> log;
};

// Profiles come back in corpus order. Throws InsufficientGroup,
// InvalidArgument (a subject with fewer than two transcripts) and scorer
// errors prefixed with the failing fold.
std::vector<SubjectProfile> run_loso(const Corpus& corpus, const ScorerSpec& spec,
                                     const LosoOptions& options = {});

inline constexpr int kMaxSigmaMultiplier = 3;

struct ThresholdOptions {
  int k_sigma = 2;  // 0..kMaxSigmaMultiplier
  SigmaForm sigma_form = SigmaForm::Population;
};

struct ThresholdSet {
  double theta_c = 0;   // mean P̄_C over controls
  double theta_ad = 0;  // mean P̄_AD over AD subjects
  double dbar_c = 0;
  double dbar_ad = 0;
  double sigma_c = 0;
  double sigma_ad = 0;
  int k_sigma = 0;
  double dstar_c = 0;   // dbar_c - k sigma_c
  double dstar_ad = 0;  // dbar_ad + k sigma_ad
};

// Aggregates over exactly the given members. Throws DegenerateGroup when a
// side is empty, or has one member under the sample form.
ThresholdSet aggregate_thresholds(std::span<const SubjectProfile* const> controls,
                                  std::span<const SubjectProfile* const> ad,
                                  const ThresholdOptions& options = {});

// Excludes held_out from its own group. Throws InvalidArgument when held_out
// is not among the profiles.
ThresholdSet build_thresholds(std::span<const SubjectProfile> profiles,
                              std::string_view held_out, const ThresholdOptions& options = {});

struct Prediction {
  std::string subject_id;
  Rule rule = Rule::PbarC;
  Group predicted = Group::Control;
  double margin = 0;
};

// AD iff P̄_C > θ_C. margin = P̄_C - θ_C.
Prediction classify_pbar_c(const SubjectProfile& profile, double theta_c);
// Control iff P̄_AD > θ_AD. margin = P̄_AD - θ_AD.
Prediction classify_pbar_ad(const SubjectProfile& profile, double theta_ad);
// Nearest of D̄_C, D̄_AD. margin = |D - D̄_C| - |D - D̄_AD|, positive towards AD.
Prediction classify_dbar(const SubjectProfile& profile, const ThresholdSet& t,
                         TiePolicy tie = TiePolicy::AD);
// As classify_dbar over D̄*_C, D̄*_AD.
Prediction classify_dstar(const SubjectProfile& profile, const ThresholdSet& t,
                          TiePolicy tie = TiePolicy::AD);

struct EvaluateOptions {
  ThresholdOptions thresholds;
  TiePolicy tie = TiePolicy::AD;
};

struct Evaluation {
  std::vector<SubjectProfile> profiles;
  std::vector<Prediction> predictions;  // subject-major, rules in kRules order
  EvaluationReport report;
};

// Classifies every subject under all four rules with per-subject thresholds.
Evaluation evaluate_profiles(std::vector<SubjectProfile> profiles, std::string model,
                             const EvaluateOptions& options = {});

// run_loso followed by evaluate_profiles.
Evaluation evaluate_all(const Corpus& corpus, const ScorerSpec& spec,
                        const EvaluateOptions& options = {}, const LosoOptions& loso = {});

// subject_id,group,Pbar_C,Pbar_AD,D,Pbar_C_pred,Pbar_AD_pred,Dbar_pred,Dstar_pred
std::string profiles_csv(const Evaluation& evaluation);

}  // namespace pplmark
