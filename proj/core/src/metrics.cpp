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

#include "pplmark/metrics.hpp"

#include <cstdio>
#include <map>

#include <nlohmann/json.hpp>

#include "pplmark/error.hpp"

namespace pplmark {
namespace {

double ratio(std::size_t num, std::size_t den, bool& undefined) {
  if (den == 0) {
    undefined = true;
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

nlohmann::ordered_json class_json(const ClassMetrics& m) {
  nlohmann::ordered_json j;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["f1"] = m.f1;
  j["precision_undefined"] = m.precision_undefined;
  j["recall_undefined"] = m.recall_undefined;
  j["f1_undefined"] = m.f1_undefined;
  return j;
}

ClassMetrics class_from_json(const nlohmann::json& j) {
  ClassMetrics m;
  m.precision = j.at("precision").get<double>();
  m.recall = j.at("recall").get<double>();
  m.f1 = j.at("f1").get<double>();
  m.precision_undefined = j.value("precision_undefined", false);
  m.recall_undefined = j.value("recall_undefined", false);
  m.f1_undefined = j.value("f1_undefined", false);
  return m;
}

}  // namespace

ConfusionCounts confusion(std::span<const Labeled> predictions, std::span<const Labeled> gold) {
  std::map<std::string_view, Group> truth;
  for (const auto& g : gold) {
    if (!truth.emplace(g.subject_id, g.label).second) {
      raise(ErrorKind::SubjectMismatch, "subject '" + g.subject_id + "' listed twice in gold");
    }
  }
  if (predictions.size() != truth.size()) {
    raise(ErrorKind::SubjectMismatch, "prediction and gold subject sets differ in size");
  }
  ConfusionCounts c;
  std::map<std::string_view, bool> seen;
  for (const auto& p : predictions) {
    auto it = truth.find(p.subject_id);
    if (it == truth.end()) {
      raise(ErrorKind::SubjectMismatch, "no gold label for subject '" + p.subject_id + "'");
    }
    if (!seen.emplace(p.subject_id, true).second) {
      raise(ErrorKind::SubjectMismatch, "subject '" + p.subject_id + "' predicted twice");
    }
    const bool gold_ad = it->second == Group::AD;
    const bool pred_ad = p.label == Group::AD;
    if (gold_ad && pred_ad) ++c.tp;
    else if (!gold_ad && pred_ad) ++c.fp;
    else if (gold_ad && !pred_ad) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double f1_score(double precision, double recall) {
  const double sum = precision + recall;
  return sum == 0.0 ? 0.0 : 2.0 * precision * recall / sum;
}

ClassMetrics precision_recall_f1(const ConfusionCounts& counts, Group positive) {
  // With Control as positive the table is read with TP<->TN and FP<->FN.
  const bool ad = positive == Group::AD;
  const std::size_t tp = ad ? counts.tp : counts.tn;
  const std::size_t fp = ad ? counts.fp : counts.fn;
  const std::size_t fn = ad ? counts.fn : counts.fp;

  ClassMetrics m;
  m.precision = ratio(tp, tp + fp, m.precision_undefined);
  m.recall = ratio(tp, tp + fn, m.recall_undefined);
  m.f1_undefined = m.precision + m.recall == 0.0;
  m.f1 = f1_score(m.precision, m.recall);
  return m;
}

double accuracy(const ConfusionCounts& counts) {
  bool undefined = false;
  return ratio(counts.tp + counts.tn, counts.total(), undefined);
}

double harmonic_mean(std::span<const double> values) {
  if (values.empty()) raise(ErrorKind::EmptyInput, "harmonic mean of no values");
  double inv = 0;
  for (double x : values) {
    if (!(x > 0)) raise(ErrorKind::NonPositiveInput, "harmonic mean needs positive inputs");
    inv += 1.0 / x;
  }
  return static_cast<double>(values.size()) / inv;
}

RuleReport make_rule_report(std::string rule, const ConfusionCounts& counts) {
  RuleReport r;
  r.rule = std::move(rule);
  r.counts = counts;
  r.accuracy = accuracy(counts);
  r.ad = precision_recall_f1(counts, Group::AD);
  r.control = precision_recall_f1(counts, Group::Control);
  if (r.accuracy > 0 && r.ad.f1 > 0 && r.control.f1 > 0) {
    const double xs[] = {r.accuracy, r.ad.f1, r.control.f1};
    r.hm = harmonic_mean(xs);
  }
  return r;
}

std::string report_csv(std::span<const EvaluationReport> reports) {
  std::string out = "model,rule,acc,P_AD,R_AD,F1_AD,P_C,R_C,F1_C,HM\n";
  char buf[512];
  for (const auto& rep : reports) {
    for (const auto& r : rep.rules) {
      std::snprintf(buf, sizeof buf, "%s,%s,%.2f,%.2f,%.2f,%.2f,%.2f,%.2f,%.2f,", rep.model.c_str(),
                    r.rule.c_str(), r.accuracy, r.ad.precision, r.ad.recall, r.ad.f1,
                    r.control.precision, r.control.recall, r.control.f1);
      out += buf;
      if (r.hm) {
        std::snprintf(buf, sizeof buf, "%.2f", *r.hm);
        out += buf;
      } else {
        out += "NA";
      }
      out += '\n';
    }
  }
  return out;
}

std::string report_to_json(const EvaluationReport& report) {
  nlohmann::ordered_json doc;
  doc["model"] = report.model;
  nlohmann::ordered_json rules = nlohmann::ordered_json::array();
  for (const auto& r : report.rules) {
    nlohmann::ordered_json j;
    j["rule"] = r.rule;
    j["counts"] = {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"fn", r.counts.fn},
                   {"tn", r.counts.tn}};
    j["accuracy"] = r.accuracy;
    j["ad"] = class_json(r.ad);
    j["control"] = class_json(r.control);
    j["hm"] = r.hm ? nlohmann::ordered_json(*r.hm) : nlohmann::ordered_json(nullptr);
    rules.push_back(std::move(j));
  }
  doc["rules"] = std::move(rules);
  return doc.dump(2) + "\n";
}

EvaluationReport report_from_json(std::string_view text) {
  try {
    auto doc = nlohmann::json::parse(text);
    EvaluationReport rep;
    rep.model = doc.at("model").get<std::string>();
    for (const auto& j : doc.at("rules")) {
      RuleReport r;
      r.rule = j.at("rule").get<std::string>();
      const auto& c = j.at("counts");
      r.counts = {c.at("tp").get<std::size_t>(), c.at("fp").get<std::size_t>(),
                  c.at("fn").get<std::size_t>(), c.at("tn").get<std::size_t>()};
      r.accuracy = j.at("accuracy").get<double>();
      r.ad = class_from_json(j.at("ad"));
      r.control = class_from_json(j.at("control"));
      if (!j.at("hm").is_null()) r.hm = j.at("hm").get<double>();
      rep.rules.push_back(std::move(r));
    }
    return rep;
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::FormatError, std::string("report JSON: ") + e.what());
  }
}

}  // namespace pplmark
