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

#include "pplmark/chat.hpp"

#include <algorithm>
#include <cctype>
#include <array>
#include <map>
#include <regex>
#include <set>
#include <unordered_set>
#include <utility>

#include "pplmark/hash.hpp"

namespace pplmark {
namespace {

// UTF-8 layout symbols deleted before lexing.
constexpr std::array<std::string_view, 34> kLayoutSymbols = {
    "⌈", "⌉", "⌊", "⌋",  // overlap brackets
    "↑", "↓", "„", "‡",  // arrows, tag, vocative
    "≠", "∆", "∇", "°", "▔", "▁", "☺",
    "♋", "∬", "⇗", "↗", "→", "↘", "⇘",
    "∞", "≈", "≋", "∾", "⁑", "↫", "ˈ",
    "ˌ", "“", "”", "‹", "›",
};

constexpr std::array<std::string_view, 7> kHesitations = {"uh", "um", "er", "erm",
                                                          "uhm", "hm", "hmm"};
constexpr std::array<std::string_view, 3> kUnintelligible = {"xxx", "yyy", "www"};

constexpr std::array<std::string_view, 5> kRetraceCodes = {"/", "//", "///", "/-", "/?"};
constexpr std::array<std::string_view, 4> kExactCodes = {"!", "!!", "?", "e"};
constexpr std::array<std::string_view, 11> kPrefixCodes = {":", "*", "=", "%", "+", "^",
                                                           "#", "-", "x ", ">", "<"};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

template <std::size_t N>
bool one_of(std::string_view s, const std::array<std::string_view, N>& set) {
  return std::find(set.begin(), set.end(), s) != set.end();
}

std::string strip_layout(std::string_view line) {
  std::string out;
  out.reserve(line.size());
  bool in_bullet = false;
  for (std::size_t i = 0; i < line.size();) {
    if (line[i] == '\x15') {
      in_bullet = !in_bullet;
      out.push_back(' ');
      ++i;
      continue;
    }
    if (in_bullet) {
      ++i;
      continue;
    }
    bool matched = false;
    if (static_cast<unsigned char>(line[i]) >= 0x80) {
      for (auto sym : kLayoutSymbols) {
        if (line.substr(i, sym.size()) == sym) {
          i += sym.size();
          matched = true;
          break;
        }
      }
    }
    if (!matched) out.push_back(line[i++]);
  }
  return out;
}

bool is_pause(std::string_view w) {
  static const std::regex kPause(R"(^\((\.{1,3}|[0-9]*:?[0-9]+\.?[0-9]*)\)$)");
  return w.size() >= 3 && w.front() == '(' && w.back() == ')' &&
         std::regex_match(w.begin(), w.end(), kPause);
}

enum class ItemKind { Word, Open, Close, Code };

struct Item {
  ItemKind kind;
  std::string text;
};

std::vector<Item> lex(std::string_view line, std::vector<std::string>* warnings) {
  std::vector<Item> items;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) {
      if (!is_pause(word)) items.push_back({ItemKind::Word, word});
      word.clear();
    }
  };
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (is_space(c)) {
      flush();
    } else if (c == '[') {
      flush();
      std::size_t end = line.find(']', i + 1);
      if (end == std::string_view::npos) {
        if (warnings) warnings->push_back("unterminated code '" + std::string(line.substr(i)) + "'");
        end = line.size();
      }
      items.push_back({ItemKind::Code, std::string(trim(line.substr(i + 1, end - i - 1)))});
      i = end;
    } else if ((c == '<' || c == '>') && word == "+") {
      word.push_back(c);  // the +< and +> linkers
    } else if (c == '<') {
      flush();
      items.push_back({ItemKind::Open, {}});
    } else if (c == '>') {
      flush();
      items.push_back({ItemKind::Close, {}});
    } else {
      word.push_back(c);
    }
  }
  flush();
  return items;
}

bool known_code(std::string_view code) {
  if (one_of(code, kExactCodes)) return true;
  for (auto p : kPrefixCodes) {
    if (code.substr(0, p.size()) == p) return true;
  }
  return false;
}

// Applies step 4 and returns the surviving raw words.
std::vector<std::string> apply_codes(const std::vector<Item>& items,
                                     std::vector<std::string>* warnings) {
  std::vector<std::vector<std::string>> units;
  std::vector<std::size_t> opens;
  for (const auto& item : items) {
    switch (item.kind) {
      case ItemKind::Word:
        units.push_back({item.text});
        break;
      case ItemKind::Open:
        opens.push_back(units.size());
        break;
      case ItemKind::Close: {
        if (opens.empty()) {
          if (warnings) warnings->push_back("unbalanced '>'");
          break;
        }
        std::size_t start = std::min(opens.back(), units.size());
        opens.pop_back();
        std::vector<std::string> merged;
        for (std::size_t u = start; u < units.size(); ++u) {
          merged.insert(merged.end(), units[u].begin(), units[u].end());
        }
        units.resize(start);
        units.push_back(std::move(merged));
        break;
      }
      case ItemKind::Code:
        if (one_of(item.text, kRetraceCodes)) {
          if (!units.empty()) units.pop_back();
          for (auto& o : opens) o = std::min(o, units.size());
        } else if (!known_code(item.text) && warnings) {
          warnings->push_back("dropped unrecognized code [" + item.text + "]");
        }
        break;
    }
  }
  std::vector<std::string> words;
  for (auto& u : units) {
    for (auto& w : u) words.push_back(std::move(w));
  }
  return words;
}

bool is_omitted_word(std::string_view w) {
  return w.size() >= 2 && w[0] == '0' &&
         std::isalpha(static_cast<unsigned char>(w[1]));
}

bool droppable(std::string_view w) {
  return w.empty() || one_of(w, kUnintelligible) || one_of(w, kHesitations) ||
         is_omitted_word(w);
}

// Steps 5 to 8 for one raw word; returns an empty string when it is deleted.
std::string clean_word(std::string_view raw) {
  if (raw.empty() || raw.front() == '&' || raw.front() == '+') return {};
  if (auto at = raw.find('@'); at != std::string_view::npos) raw = raw.substr(0, at);

  std::string lowered;
  lowered.reserve(raw.size());
  for (char ch : raw) {
    auto c = static_cast<unsigned char>(ch);
    if (c >= 0x80) {
      lowered.push_back(ch);
    } else if (std::isalnum(c)) {
      lowered.push_back(static_cast<char>(std::tolower(c)));
    } else if (ch == '\'' || ch == '-') {
      lowered.push_back(ch);
    }
  }
  std::string_view w = lowered;
  while (!w.empty() && (w.front() == '\'' || w.front() == '-')) w.remove_prefix(1);
  while (!w.empty() && (w.back() == '\'' || w.back() == '-')) w.remove_suffix(1);
  if (droppable(raw) || droppable(w)) return {};
  return std::string(w);
}

}  // namespace

std::vector<std::string> normalize_utterance(std::string_view line,
                                             std::vector<std::string>* warnings) {
  std::string stripped = strip_layout(line);
  std::vector<std::string> out;
  for (const auto& raw : apply_codes(lex(stripped, warnings), warnings)) {
    std::string w = clean_word(raw);
    if (!w.empty()) out.push_back(std::move(w));
  }
  return out;
}

Transcript parse_chat_file(std::string_view raw, TranscriptIdentity identity,
                           const ChatOptions& options, std::vector<std::string>* warnings) {
  if (raw.substr(0, 3) == "\xEF\xBB\xBF") raw.remove_prefix(3);

  // Logical tiers: continuation lines (leading whitespace) are folded into the
  // line above.
  struct Tier {
    char marker;
    std::string text;
    std::size_t line_no;
  };
  std::vector<Tier> tiers;
  bool seen_header = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= raw.size()) {
    std::size_t nl = raw.find('\n', pos);
    if (nl == std::string_view::npos) nl = raw.size();
    std::string_view line = raw.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;
    char first = line.front();
    if (first == '@' || first == '%' || first == '*') {
      if (first == '@') seen_header = true;
      tiers.push_back({first, std::string(line.substr(1)), line_no});
    } else if (is_space(first) && !tiers.empty()) {
      tiers.back().text += ' ';
      tiers.back().text += trim(line);
    } else if (warnings) {
      warnings->push_back("line " + std::to_string(line_no) + ": stray text ignored");
    }
  }
  if (!seen_header) raise(ErrorKind::MalformedChat, "no CHAT header lines (@...) found");

  Transcript t{std::move(identity.subject_id), std::move(identity.session_id), identity.group, {}};
  for (const auto& tier : tiers) {
    if (tier.marker != '*') continue;
    std::size_t colon = tier.text.find(':');
    if (colon == std::string::npos) {
      raise(ErrorKind::MalformedChat,
            "line " + std::to_string(tier.line_no) + ": main tier without speaker colon");
    }
    std::string speaker(trim(std::string_view(tier.text).substr(0, colon)));
    if (std::find(options.target_speakers.begin(), options.target_speakers.end(), speaker) ==
        options.target_speakers.end()) {
      continue;
    }
    auto tokens = normalize_utterance(std::string_view(tier.text).substr(colon + 1), warnings);
    if (!tokens.empty()) t.utterances.push_back(std::move(tokens));
  }
  if (t.utterances.empty()) {
    raise(ErrorKind::EmptyTranscript, "no participant utterances after normalization");
  }
  return t;
}

LoadResult load_corpus(const std::filesystem::path& root, const LoadOptions& options) {
  namespace fs = std::filesystem;
  const std::regex name_re(options.name_pattern);
  LoadResult result;

  std::map<std::string, SubjectRecord> subjects;
  std::set<std::pair<std::string, std::string>> seen_sessions;

  for (Group group : kGroups) {
    fs::path dir = root / (group == Group::Control ? options.control_dir : options.dementia_dir);
    if (!options.task_subdir.empty()) dir /= options.task_subdir;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
      raise(ErrorKind::MissingClassDirectory, "missing class directory '" + dir.string() + "'");
    }

    std::vector<fs::path> files;
    auto collect = [&](const fs::directory_entry& e) {
      if (e.is_regular_file() && e.path().extension() == options.extension) {
        files.push_back(e.path());
      }
    };
    if (options.recursive) {
      for (const auto& e : fs::recursive_directory_iterator(dir)) collect(e);
    } else {
      for (const auto& e : fs::directory_iterator(dir)) collect(e);
    }
    std::sort(files.begin(), files.end());

    for (const auto& path : files) {
      ++result.files_seen;
      std::string stem = path.stem().string();
      std::smatch m;
      if (!std::regex_match(stem, m, name_re) || m.size() < 3) {
        result.issues.push_back({path, ErrorKind::FormatError,
                                 "file name does not match subject/session pattern"});
        continue;
      }
      std::string subject = m[1].str();
      std::string session = m[2].str();
      if (!seen_sessions.emplace(subject, session).second) {
        raise(ErrorKind::DuplicateSession,
              "subject '" + subject + "' session '" + session + "' appears twice (" +
                  path.string() + ")");
      }
      auto it = subjects.find(subject);
      if (it != subjects.end() && it->second.group != group) {
        raise(ErrorKind::DuplicateSession,
              "subject '" + subject + "' appears in both class directories (" + path.string() +
                  ")");
      }

      std::vector<std::string> notes;
      try {
        Transcript t = parse_chat_file(read_file(path), {subject, session, group},
                                       options.chat, &notes);
        auto& rec = subjects[subject];
        rec.subject_id = subject;
        rec.group = group;
        rec.transcripts.push_back(std::move(t));
      } catch (const Error& e) {
        result.issues.push_back({path, e.kind(), e.what()});
      }
      for (auto& n : notes) result.warnings.push_back(path.string() + ": " + n);
    }
  }

  for (auto& [id, rec] : subjects) result.corpus.subjects.push_back(std::move(rec));
  result.corpus.sort();
  return result;
}

Corpus filter_multi_session(Corpus corpus, std::size_t min_sessions) {
  std::erase_if(corpus.subjects, [min_sessions](const SubjectRecord& s) {
    return s.transcripts.size() < min_sessions;
  });
  return corpus;
}

GroupStats group_stats(const Corpus& corpus, Group group) {
  GroupStats gs;
  gs.group = group;
  std::unordered_set<std::string> group_types;
  std::size_t total_tokens = 0;
  double sum_tokens = 0;
  double sum_unique = 0;
  for (const auto& s : corpus.subjects) {
    if (s.group != group) continue;
    ++gs.participants;
    for (const auto& t : s.transcripts) {
      ++gs.transcripts;
      std::unordered_set<std::string_view> types;
      std::size_t n = 0;
      for (const auto& u : t.utterances) {
        for (const auto& w : u) {
          types.insert(w);
          group_types.insert(w);
          ++n;
        }
      }
      total_tokens += n;
      sum_tokens += static_cast<double>(n);
      sum_unique += static_cast<double>(types.size());
    }
  }
  if (gs.transcripts == 0 || total_tokens == 0) {
    raise(ErrorKind::EmptyGroup, "group " + std::string(to_string(group)) + " has no transcripts");
  }
  gs.avg_tokens = sum_tokens / static_cast<double>(gs.transcripts);
  gs.avg_unique_tokens = sum_unique / static_cast<double>(gs.transcripts);
  gs.ttr = static_cast<double>(group_types.size()) / static_cast<double>(total_tokens);
  return gs;
}

CorpusStats corpus_stats(const Corpus& corpus) {
  return {group_stats(corpus, Group::Control), group_stats(corpus, Group::AD)};
}

}  // namespace pplmark
