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

#include "pplmark/error.hpp"
#include "pplmark/metrics.hpp"

using namespace pplmark;

namespace {

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

}  // namespace

TEST_CASE("confusion counts with AD positive") {
  const std::vector<Labeled> gold = {{"a", Group::AD}, {"b", Group::AD}, {"c", Group::Control},
                                     {"d", Group::Control}, {"e", Group::Control}};
  const std::vector<Labeled> pred = {{"e", Group::AD}, {"a", Group::AD}, {"b", Group::Control},
                                     {"c", Group::Control}, {"d", Group::Control}};
  auto c = confusion(pred, gold);
  CHECK(c == ConfusionCounts{1, 1, 1, 2});
  CHECK(c.total() == 5);
  CHECK(accuracy(c) == doctest::Approx(0.6));

  auto ad = precision_recall_f1(c, Group::AD);
  CHECK(ad.precision == doctest::Approx(0.5));
  CHECK(ad.recall == doctest::Approx(0.5));
  CHECK(ad.f1 == doctest::Approx(0.5));
  auto ctl = precision_recall_f1(c, Group::Control);
  CHECK(ctl.precision == doctest::Approx(2.0 / 3.0));
  CHECK(ctl.recall == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("subject sets must agree") {
  const std::vector<Labeled> gold = {{"a", Group::AD}, {"b", Group::Control}};
  CHECK(kind_of([&] { confusion(std::vector<Labeled>{{"a", Group::AD}}, gold); }) ==
        ErrorKind::SubjectMismatch);
  CHECK(kind_of([&] {
          confusion(std::vector<Labeled>{{"a", Group::AD}, {"z", Group::AD}}, gold);
        }) == ErrorKind::SubjectMismatch);
  CHECK(kind_of([&] {
          confusion(std::vector<Labeled>{{"a", Group::AD}, {"a", Group::AD}}, gold);
        }) == ErrorKind::SubjectMismatch);
}

TEST_CASE("zero denominators are flagged") {
  // Everything predicted Control: no AD predictions at all.
  ConfusionCounts c{0, 0, 3, 4};
  auto ad = precision_recall_f1(c, Group::AD);
  CHECK(ad.precision == 0.0);
  CHECK(ad.precision_undefined);
  CHECK(ad.recall == 0.0);
  CHECK_FALSE(ad.recall_undefined);
  CHECK(ad.f1_undefined);
  auto ctl = precision_recall_f1(c, Group::Control);
  CHECK_FALSE(ctl.precision_undefined);
  CHECK(ctl.recall == 1.0);

  auto r = make_rule_report("Pbar_C", c);
  CHECK_FALSE(r.hm.has_value());
  CHECK(accuracy(ConfusionCounts{}) == 0.0);
}

TEST_CASE("harmonic mean") {
  const double xs[] = {1.0, 0.5, 0.25};
  CHECK(harmonic_mean(xs) == doctest::Approx(3.0 / 7.0));
  const double one[] = {0.93};
  CHECK(harmonic_mean(one) == doctest::Approx(0.93));
  CHECK(kind_of([] { harmonic_mean(std::span<const double>{}); }) == ErrorKind::EmptyInput);
  const double bad[] = {0.5, 0.0};
  CHECK(kind_of([&] { harmonic_mean(bad); }) == ErrorKind::NonPositiveInput);
}

TEST_CASE("report formats") {
  EvaluationReport rep{"2-grams", {make_rule_report("Dstar", {67, 1, 10, 73}),
                                   make_rule_report("Pbar_C", {0, 0, 3, 4})}};
  const EvaluationReport reps[] = {rep};
  const std::string csv = report_csv(reps);
  CHECK(csv ==
        "model,rule,acc,P_AD,R_AD,F1_AD,P_C,R_C,F1_C,HM\n"
        "2-grams,Dstar,0.93,0.99,0.87,0.92,0.88,0.99,0.93,0.93\n"
        "2-grams,Pbar_C,0.57,0.00,0.00,0.00,0.57,1.00,0.73,NA\n");
  auto back = report_from_json(report_to_json(rep));
  CHECK(back.model == rep.model);
  REQUIRE(back.rules.size() == 2);
  CHECK(back.rules[0].counts == rep.rules[0].counts);
  CHECK(back.rules[0].hm == rep.rules[0].hm);
  CHECK(back.rules[1].ad.precision_undefined);
  CHECK_FALSE(back.rules[1].hm);
  CHECK(report_to_json(back) == report_to_json(rep));
  CHECK(kind_of([] { report_from_json("{}"); }) == ErrorKind::FormatError);
}
