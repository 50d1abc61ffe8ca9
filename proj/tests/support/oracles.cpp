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

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "pplmark/vocabulary.hpp"

namespace pplmark::testing {

Tokens pad(const Utterance& u, int order) {
  Tokens t(static_cast<std::size_t>(order - 1), std::string(kSentenceStart));
  t.insert(t.end(), u.begin(), u.end());
  t.emplace_back(kSentenceEnd);
  return t;
}

BruteForceLm::BruteForceLm(int order, double discount, std::vector<Utterance> texts,
                           std::vector<std::string> vocabulary)
    : order_(order), d_(discount), texts_(std::move(texts)), vocab_(std::move(vocabulary)) {}

std::uint64_t BruteForceLm::raw(const Tokens& gram) const {
  std::uint64_t n = 0;
  for (const auto& u : texts_) {
    const Tokens t = pad(u, order_);
    // Predicted positions start after the N-1 start symbols.
    for (std::size_t end = static_cast<std::size_t>(order_ - 1); end < t.size(); ++end) {
      if (end + 1 < gram.size()) continue;
      const std::size_t begin = end + 1 - gram.size();
      if (std::equal(gram.begin(), gram.end(), t.begin() + static_cast<std::ptrdiff_t>(begin))) {
        ++n;
      }
    }
  }
  return n;
}

std::uint64_t BruteForceLm::continuation(const Tokens& gram) const {
  std::set<std::string> left;
  for (const auto& u : texts_) {
    const Tokens t = pad(u, order_);
    for (std::size_t end = static_cast<std::size_t>(order_ - 1); end < t.size(); ++end) {
      if (end < gram.size()) continue;
      const std::size_t begin = end + 1 - gram.size();
      if (std::equal(gram.begin(), gram.end(), t.begin() + static_cast<std::ptrdiff_t>(begin))) {
        left.insert(t[begin - 1]);
      }
    }
  }
  return left.size();
}

double BruteForceLm::kn_level(const std::string& w, const Tokens& context) const {
  const bool top = static_cast<int>(context.size()) == order_ - 1;
  double lower = 1.0 / static_cast<double>(vocab_.size());
  if (!context.empty()) lower = kn_level(w, Tokens(context.begin() + 1, context.end()));

  double total = 0;
  double distinct = 0;
  double cw = 0;
  for (const auto& v : vocab_) {
    Tokens g = context;
    g.push_back(v);
    const double c = static_cast<double>(top ? raw(g) : continuation(g));
    total += c;
    if (c > 0) distinct += 1;
    if (v == w) cw = c;
  }
  if (total == 0) return lower;
  return std::max(cw - d_, 0.0) / total + d_ * distinct / total * lower;
}

double BruteForceLm::kn(const std::string& w, const Tokens& context) const {
  return kn_level(w, context);
}

double BruteForceLm::mle(const std::string& w, const Tokens& context) const {
  double total = 0;
  double cw = 0;
  for (const auto& v : vocab_) {
    Tokens g = context;
    g.push_back(v);
    const double c = static_cast<double>(raw(g));
    total += c;
    if (v == w) cw = c;
  }
  return total == 0 ? 0.0 : cw / total;
}

double chain_rule_perplexity(const NgramModel& model, const std::vector<Utterance>& texts) {
  double logp = 0;
  std::size_t k = 0;
  const int n = model.order();
  for (const auto& u : texts) {
    const Tokens t = pad(u, n);
    for (std::size_t i = static_cast<std::size_t>(n - 1); i < t.size(); ++i) {
      std::vector<std::string> ctx(t.begin() + static_cast<std::ptrdiff_t>(i - (n - 1)),
                                   t.begin() + static_cast<std::ptrdiff_t>(i));
      logp += std::log(model.prob(t[i], ctx));
      ++k;
    }
  }
  return std::exp(-logp / static_cast<double>(k));
}

Corpus synthetic_corpus(const std::vector<SyntheticGroup>& groups, std::uint64_t seed,
                        std::size_t utterances) {
  std::mt19937_64 rng(seed);
  Corpus c;
  for (const auto& g : groups) {
    std::uniform_int_distribution<std::size_t> pick(0, g.alphabet.size() - 1);
    std::uniform_int_distribution<std::size_t> len(3, 8);
    for (std::size_t s = 0; s < g.subjects; ++s) {
      SubjectRecord rec;
      rec.subject_id = (g.group == Group::AD ? "A" : "C") + std::to_string(s);
      rec.group = g.group;
      for (std::size_t t = 0; t < g.transcripts; ++t) {
        Transcript tr;
        tr.subject_id = rec.subject_id;
        tr.session_id = std::to_string(t);
        tr.group = g.group;
        for (std::size_t u = 0; u < utterances; ++u) {
          Utterance utt(len(rng));
          for (auto& w : utt) w = g.alphabet[pick(rng)];
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

std::vector<SubjectProfile> random_profiles(std::size_t controls, std::size_t ad,
                                            std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ppl(5.0, 200.0);
  std::vector<SubjectProfile> out;
  for (std::size_t i = 0; i < controls + ad; ++i) {
    SubjectProfile p;
    p.group = i < controls ? Group::Control : Group::AD;
    p.subject_id = (i < controls ? "C" : "A") + std::to_string(i);
    p.pbar_c = ppl(rng);
    p.pbar_ad = ppl(rng);
    p.d = p.pbar_ad - p.pbar_c;
    out.push_back(std::move(p));
  }
  return out;
}

ThresholdSet thresholds_after_deletion(std::vector<SubjectProfile> profiles,
                                       const std::string& held_out, int k_sigma,
                                       SigmaForm form) {
  std::erase_if(profiles, [&](const SubjectProfile& p) { return p.subject_id == held_out; });

  auto stats = [&](Group g, double SubjectProfile::*field) {
    double sum = 0;
    double n = 0;
    for (const auto& p : profiles) {
      if (p.group != g) continue;
      sum += p.*field;
      n += 1;
    }
    return sum / n;
  };
  auto sd = [&](Group g, double mean) {
    double ss = 0;
    double n = 0;
    for (const auto& p : profiles) {
      if (p.group != g) continue;
      ss += (p.d - mean) * (p.d - mean);
      n += 1;
    }
    return std::sqrt(ss / (form == SigmaForm::Sample ? n - 1 : n));
  };

  ThresholdSet t;
  t.theta_c = stats(Group::Control, &SubjectProfile::pbar_c);
  t.theta_ad = stats(Group::AD, &SubjectProfile::pbar_ad);
  t.dbar_c = stats(Group::Control, &SubjectProfile::d);
  t.dbar_ad = stats(Group::AD, &SubjectProfile::d);
  t.sigma_c = sd(Group::Control, t.dbar_c);
  t.sigma_ad = sd(Group::AD, t.dbar_ad);
  t.k_sigma = k_sigma;
  t.dstar_c = t.dbar_c - k_sigma * t.sigma_c;
  t.dstar_ad = t.dbar_ad + k_sigma * t.sigma_ad;
  return t;
}

}  // namespace pplmark::testing
