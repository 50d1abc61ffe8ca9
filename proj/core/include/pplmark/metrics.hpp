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

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pplmark/types.hpp"

namespace pplmark {

// AD is the positive class.
struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct Labeled {
  std::string subject_id;
  Group label = Group::Control;
};

// Throws SubjectMismatch unless both lists cover the same subjects exactly
// once.
ConfusionCounts confusion(std::span<const Labeled> predictions, std::span<const Labeled> gold);

// A zero denominator yields 0 and sets the matching flag.
struct ClassMetrics {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

// 2PR/(P+R); 0 when P+R is 0.
double f1_score(double precision, double recall);

ClassMetrics precision_recall_f1(const ConfusionCounts& counts, Group positive);

// (TP+TN)/total; 0 for an empty table.
double accuracy(const ConfusionCounts& counts);

// n / sum(1/x). Throws EmptyInput or NonPositiveInput.
double harmonic_mean(std::span<const double> values);

struct RuleReport {
  std::string rule;
  ConfusionCounts counts;
  double accuracy = 0;
  ClassMetrics ad;
  ClassMetrics control;
  // HM(accuracy, F1_AD, F1_C); empty when any input is zero.
  std::optional<double> hm;
};

RuleReport make_rule_report(std::string rule, const ConfusionCounts& counts);

struct EvaluationReport {
  std::string model;
  std::vector<RuleReport> rules;
};

// Columns: model,rule,acc,P_AD,R_AD,F1_AD,P_C,R_C,F1_C,HM, two decimals.
std::string report_csv(std::span<const EvaluationReport> reports);
std::string report_to_json(const EvaluationReport& report);
EvaluationReport report_from_json(std::string_view text);

}  // namespace pplmark
