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

#include "pplmark/corpus_io.hpp"

#include <cstdio>
#include <set>

#include <nlohmann/json.hpp>

#include "pplmark/error.hpp"
#include "pplmark/hash.hpp"

namespace pplmark {

using ordered_json = nlohmann::ordered_json;

std::string corpus_to_json(const Corpus& corpus) {
  ordered_json doc = ordered_json::array();
  for (const auto& s : corpus.subjects) {
    ordered_json rec;
    rec["subject_id"] = s.subject_id;
    rec["group"] = std::string(to_string(s.group));
    ordered_json sessions = ordered_json::array();
    ordered_json transcripts = ordered_json::array();
    for (const auto& t : s.transcripts) {
      sessions.push_back(t.session_id);
      transcripts.push_back(t.utterances);
    }
    rec["sessions"] = std::move(sessions);
    rec["transcripts"] = std::move(transcripts);
    doc.push_back(std::move(rec));
  }
  return doc.dump(1) + "\n";
}

Corpus corpus_from_json(std::string_view text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::FormatError, std::string("corpus JSON: ") + e.what());
  }
  if (!doc.is_array()) raise(ErrorKind::FormatError, "corpus JSON: top level must be an array");

  Corpus corpus;
  std::set<std::string> ids;
  try {
    for (const auto& rec : doc) {
      SubjectRecord s;
      s.subject_id = rec.at("subject_id").get<std::string>();
      auto group = parse_group(rec.at("group").get<std::string>());
      if (!group) raise(ErrorKind::FormatError, "corpus JSON: bad group for " + s.subject_id);
      s.group = *group;
      if (!ids.insert(s.subject_id).second) {
        raise(ErrorKind::DuplicateSession, "corpus JSON: duplicate subject " + s.subject_id);
      }
      const auto& transcripts = rec.at("transcripts");
      const ordered_json* sessions = rec.contains("sessions") ? &rec.at("sessions") : nullptr;
      if (sessions && sessions->size() != transcripts.size()) {
        raise(ErrorKind::FormatError, "corpus JSON: sessions/transcripts length mismatch for " +
                                          s.subject_id);
      }
      for (std::size_t i = 0; i < transcripts.size(); ++i) {
        Transcript t;
        t.subject_id = s.subject_id;
        t.group = s.group;
        t.session_id = sessions ? (*sessions)[i].get<std::string>() : std::to_string(i);
        t.utterances = transcripts[i].get<std::vector<Utterance>>();
        for (const auto& u : t.utterances) {
          if (u.empty()) raise(ErrorKind::FormatError, "corpus JSON: empty utterance");
          for (const auto& w : u) {
            if (w.empty() || w.find_first_of(" \t\r\n") != std::string::npos) {
              raise(ErrorKind::FormatError, "corpus JSON: invalid token '" + w + "'");
            }
          }
        }
        if (t.utterances.empty()) {
          raise(ErrorKind::FormatError, "corpus JSON: transcript without utterances");
        }
        s.transcripts.push_back(std::move(t));
      }
      corpus.subjects.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorKind::FormatError, std::string("corpus JSON: ") + e.what());
  }
  corpus.sort();
  return corpus;
}

Corpus load_corpus_json(const std::filesystem::path& path) {
  return corpus_from_json(read_file(path));
}

std::string stats_to_csv(std::span<const GroupStats> rows) {
  std::string out = "group,avg_tokens,avg_unique_tokens,participants,transcripts,ttr\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.2f,%.2f,%zu,%zu,%.4f\n",
                  std::string(to_string(r.group)).c_str(), r.avg_tokens, r.avg_unique_tokens,
                  r.participants, r.transcripts, r.ttr);
    out += buf;
  }
  return out;
}

}  // namespace pplmark
