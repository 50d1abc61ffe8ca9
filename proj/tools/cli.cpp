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

#include "cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pplmark/chat.hpp"
#include "pplmark/corpus_io.hpp"
#include "pplmark/error.hpp"
#include "pplmark/harness.hpp"
#include "pplmark/hash.hpp"
#include "pplmark/metrics.hpp"
#include "pplmark/ngram.hpp"
#include "pplmark/scorer.hpp"

namespace pplmark::cli {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";
constexpr const char* kSeedVariable = "PPL_SCORER_SEED";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ScorerStartFailure:
    case ErrorKind::TrainingFailure:
    case ErrorKind::ScoringFailure:
    case ErrorKind::ScorerCrashed:
    case ErrorKind::ProtocolViolation:
    case ErrorKind::InfinitePerplexity:
      return kScorerFailure;
    case ErrorKind::UnknownWord:
      return kUnknownWord;
    case ErrorKind::IoError:
    case ErrorKind::FormatError:
      return kIoFormat;
    case ErrorKind::MalformedChat:
    case ErrorKind::EmptyTranscript:
    case ErrorKind::MissingClassDirectory:
    case ErrorKind::DuplicateSession:
      return kIngestFatal;
    default:
      return kDataError;
  }
}

std::vector<std::string> split_command(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::uint64_t default_seed() {
  if (const char* s = std::getenv(kSeedVariable); s && *s) {
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw UsageError(std::string(kSeedVariable) + " is not an unsigned integer: " + s);
    }
  }
  return 0;
}

// Everything that resolves into a scorer spec, from a config file and flags.
struct ScorerFlags {
  std::string scorer = "ngram-kn";
  int order = 2;
  double discount = 0.1;
  int epochs = 0;
  std::string sidecar;
  std::vector<std::string> sidecar_argv;
  double train_timeout_s = 0;  // 0: unbounded
  double score_timeout_s = 300;
  std::uint64_t seed = 0;

  ScorerSpec resolve() const {
    auto kind = parse_scorer_kind(scorer);
    if (!kind) throw UsageError("unknown scorer '" + scorer + "'");
    ScorerSpec spec;
    if (*kind == ScorerKind::External) {
      ExternalScorerParams p;
      p.command = sidecar_argv.empty() ? split_command(sidecar) : sidecar_argv;
      p.epochs = epochs;
      p.seed = seed;
      if (train_timeout_s > 0) {
        p.train_timeout = std::chrono::milliseconds(static_cast<long long>(train_timeout_s * 1000));
      }
      p.score_timeout = std::chrono::milliseconds(static_cast<long long>(score_timeout_s * 1000));
      spec = ScorerSpec::external(std::move(p));
    } else {
      spec = ScorerSpec::ngram(*kind, order, discount);
    }
    try {
      spec.validate();
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    return spec;
  }
};

void add_scorer_flags(CLI::App* app, ScorerFlags& f) {
  app->add_option("--scorer", f.scorer, "ngram-mle | ngram-kn | external");
  app->add_option("--order", f.order, "N-gram order (2..5)");
  app->add_option("--discount", f.discount, "Kneser-Ney discount");
  app->add_option("--epochs", f.epochs, "Fine-tuning epochs for external scorers");
  app->add_option("--sidecar", f.sidecar, "External scorer command line");
  app->add_option("--train-timeout", f.train_timeout_s, "Seconds per train request (0: none)");
  app->add_option("--score-timeout", f.score_timeout_s, "Seconds per score request");
  app->add_option("--seed", f.seed, "Seed passed to external scorers");
}

Corpus load_any_corpus(const fs::path& path, std::ostream& err) {
  if (fs::is_directory(path)) {
    auto loaded = load_corpus(path);
    for (const auto& issue : loaded.issues) {
      err << "warning: " << issue.path.string() << ": " << issue.message << "\n";
    }
    return std::move(loaded.corpus);
  }
  return load_corpus_json(path);
}

std::string text_hash(const std::string& bytes) { return fnv1a_hex(bytes); }

// One utterance per line, tokens separated by whitespace. CHAT files are
// normalized first.
std::vector<Utterance> read_text(const fs::path& path) {
  const std::string raw = read_file(path);
  if (path.extension() == ".cha") {
    return parse_chat_file(raw, {path.stem().string(), "1", Group::Control}).utterances;
  }
  std::vector<Utterance> out;
  std::istringstream in(raw);
  for (std::string line; std::getline(in, line);) {
    std::istringstream words(line);
    Utterance u;
    for (std::string w; words >> w;) u.push_back(w);
    if (!u.empty()) out.push_back(std::move(u));
  }
  return out;
}

// ---------------------------------------------------------------------------

struct IngestArgs {
  std::string input;
  std::string out;
  std::string task;
  std::size_t min_sessions = 2;
  std::string control_dir = "Control";
  std::string dementia_dir = "Dementia";
};

int cmd_ingest(const IngestArgs& a, std::ostream& out, std::ostream& err) {
  LoadOptions opts;
  opts.task_subdir = a.task;
  opts.control_dir = a.control_dir;
  opts.dementia_dir = a.dementia_dir;
  LoadResult loaded;
  try {
    loaded = load_corpus(a.input, opts);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kIngestFatal;
  }

  std::string log;
  for (const auto& issue : loaded.issues) {
    log += issue.path.string() + "\t" + std::string(to_string(issue.kind)) + "\t" + issue.message +
           "\n";
    err << "warning: " << issue.path.string() << ": " << issue.message << "\n";
  }
  for (const auto& w : loaded.warnings) log += "note\t" + w + "\n";

  Corpus filtered = filter_multi_session(loaded.corpus, a.min_sessions);
  std::vector<GroupStats> stats;
  try {
    auto cs = corpus_stats(filtered);
    stats = {cs.control, cs.ad};
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kIngestFatal;
  }

  const fs::path dir(a.out);
  const std::string corpus_json = corpus_to_json(loaded.corpus);
  const std::string stats_csv = stats_to_csv(stats);
  write_file_atomic(dir / "corpus.json", corpus_json);
  write_file_atomic(dir / "parse_log.tsv", log);
  write_file_atomic(dir / "stats.csv", stats_csv);

  ordered_json m;
  m["tool"] = "pplmark";
  m["version"] = kVersion;
  m["command"] = "ingest";
  m["config"] = {{"input", a.input},
                 {"task", a.task},
                 {"control_dir", a.control_dir},
                 {"dementia_dir", a.dementia_dir},
                 {"min_sessions", a.min_sessions}};
  m["inputs"] = {{"files_seen", loaded.files_seen},
                 {"files_rejected", loaded.issues.size()},
                 {"corpus_fnv1a64", text_hash(corpus_json)}};
  m["outputs"] = {{"corpus.json", text_hash(corpus_json)}, {"stats.csv", text_hash(stats_csv)}};
  write_file_atomic(dir / "run_manifest.json", m.dump(2) + "\n");

  out << "ingested " << loaded.corpus.subjects.size() << " subjects, "
      << loaded.corpus.transcript_count() << " transcripts (" << loaded.issues.size()
      << " files rejected); " << filtered.subjects.size() << " subjects after filtering\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string corpus;
  std::string group = "all";
  std::string exclude;
  std::string out;
  std::size_t min_sessions = 2;
  bool uniform = false;
};

int cmd_train(const TrainArgs& a, const ScorerFlags& sf, std::ostream& out) {
  ScorerSpec spec = sf.resolve();
  if (spec.kind == ScorerKind::External) {
    throw UsageError("train writes n-gram models only; external scorers train per fold");
  }
  std::optional<Group> group;
  if (a.group != "all") {
    group = parse_group(a.group);
    if (!group) throw UsageError("unknown group '" + a.group + "'");
  }

  Corpus corpus = filter_multi_session(load_corpus_json(a.corpus), a.min_sessions);
  auto vocab = std::make_shared<const Vocabulary>(Vocabulary::build(corpus));
  const auto& p = spec.ngram_params();

  std::optional<NgramModel> model;
  if (a.uniform) {
    model = NgramModel::uniform(p.order, vocab);
  } else {
    std::vector<Utterance> texts;
    for (const auto& s : corpus.subjects) {
      if ((group && s.group != *group) || s.subject_id == a.exclude) continue;
      for (const auto& t : s.transcripts) {
        texts.insert(texts.end(), t.utterances.begin(), t.utterances.end());
      }
    }
    NgramConfig config{p.order, p.discount,
                       spec.kind == ScorerKind::NgramMLE ? Estimator::MLE : Estimator::KneserNey};
    model = NgramModel::train(config, texts, vocab);
  }
  save_model(*model, a.out);
  out << "wrote " << a.out << " (" << spec.id() << ", |V|=" << vocab->size() << ")\n";
  return kOk;
}

// ---------------------------------------------------------------------------

int cmd_score(const std::string& model_path, const std::string& text_path, std::ostream& out) {
  NgramModel model = load_model(model_path);
  auto texts = read_text(text_path);
  const double ppl = perplexity(model, texts);
  if (!std::isfinite(ppl)) raise(ErrorKind::InfinitePerplexity, "model assigns probability zero");
  std::size_t k = 0;
  for (const auto& u : texts) k += u.size() + 1;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", ppl);
  out << "ppl=" << buf << " k=" << k << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string config;
  std::string corpus;
  std::string out;
  int k_sigma = 2;
  std::string sigma_form = "population";
  std::string tie_policy = "ad";
  unsigned workers = 1;
  std::string cache_dir;
  std::size_t min_sessions = 2;
};

// Fills anything the command line left unset from the JSON config file.
void apply_config(const nlohmann::json& j, const CLI::App& app, EvaluateArgs& a, ScorerFlags& s) {
  auto take = [&](const char* key, const char* flag, auto& field) {
    if (!j.contains(key) || app.count(flag) > 0) return;
    field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
  };
  take("corpus", "--corpus", a.corpus);
  take("out", "--out", a.out);
  take("k_sigma", "--k-sigma", a.k_sigma);
  take("sigma_form", "--sigma-form", a.sigma_form);
  take("tie_policy", "--tie-policy", a.tie_policy);
  take("workers", "--workers", a.workers);
  take("cache_dir", "--cache-dir", a.cache_dir);
  take("min_sessions", "--min-sessions", a.min_sessions);
  take("scorer", "--scorer", s.scorer);
  take("order", "--order", s.order);
  take("discount", "--discount", s.discount);
  take("epochs", "--epochs", s.epochs);
  take("seed", "--seed", s.seed);
  take("train_timeout", "--train-timeout", s.train_timeout_s);
  take("score_timeout", "--score-timeout", s.score_timeout_s);
  if (j.contains("sidecar") && app.count("--sidecar") == 0) {
    if (j["sidecar"].is_array()) s.sidecar_argv = j["sidecar"].get<std::vector<std::string>>();
    else s.sidecar = j["sidecar"].get<std::string>();
  }
}

int cmd_evaluate(EvaluateArgs a, ScorerFlags sf, const CLI::App& app, std::ostream& out,
                 std::ostream& err) {
  if (!a.config.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(a.config));
      if (!j.is_object()) throw UsageError("configuration must be a JSON object");
      apply_config(j, app, a, sf);
    } catch (const nlohmann::json::exception& e) {
      throw UsageError("configuration " + a.config + ": " + e.what());
    }
  }
  if (a.corpus.empty()) throw UsageError("--corpus is required");
  if (a.out.empty()) throw UsageError("--out is required");
  if (a.k_sigma < 0 || a.k_sigma > kMaxSigmaMultiplier) {
    throw UsageError("k_sigma must be an integer in [0," + std::to_string(kMaxSigmaMultiplier) +
                     "], got " + std::to_string(a.k_sigma));
  }
  auto sigma = parse_sigma_form(a.sigma_form);
  if (!sigma) throw UsageError("sigma form must be 'population' or 'sample'");
  auto tie = parse_tie_policy(a.tie_policy);
  if (!tie) throw UsageError("tie policy must be 'ad' or 'control'");
  if (a.workers == 0) throw UsageError("workers must be >= 1");
  const ScorerSpec spec = sf.resolve();

  Corpus corpus = filter_multi_session(load_any_corpus(a.corpus, err), a.min_sessions);
  const std::string corpus_json = corpus_to_json(corpus);

  LosoOptions loso;
  loso.workers = a.workers;
  if (!a.cache_dir.empty()) loso.cache_dir = a.cache_dir;
  loso.log = [&err](const std::string& line) { err << line << "\n"; };
  EvaluateOptions eo;
  eo.thresholds = {a.k_sigma, *sigma};
  eo.tie = *tie;

  Evaluation ev = evaluate_all(corpus, spec, eo, loso);

  const fs::path dir(a.out);
  const std::string report_json = report_to_json(ev.report);
  const EvaluationReport reports[] = {ev.report};
  const std::string report_table = report_csv(reports);
  const std::string profiles = profiles_csv(ev);
  write_file_atomic(dir / "report.json", report_json);
  write_file_atomic(dir / "report.csv", report_table);
  write_file_atomic(dir / "profiles.csv", profiles);

  ordered_json m;
  m["tool"] = "pplmark";
  m["version"] = kVersion;
  m["command"] = "evaluate";
  m["config"] = {{"corpus", a.corpus},
                 {"scorer", ordered_json::parse(spec.canonical_json())},
                 {"scorer_id", spec.id()},
                 {"k_sigma", a.k_sigma},
                 {"sigma_form", to_string(*sigma)},
                 {"tie_policy", *tie == TiePolicy::AD ? "ad" : "control"},
                 {"min_sessions", a.min_sessions},
                 {"workers", a.workers},
                 {"cache_dir", a.cache_dir},
                 {"seed", sf.seed}};
  m["inputs"] = {{"corpus_fnv1a64", text_hash(corpus_json)},
                 {"subjects", corpus.subjects.size()},
                 {"transcripts", corpus.transcript_count()}};
  m["outputs"] = {{"report.json", text_hash(report_json)},
                  {"report.csv", text_hash(report_table)},
                  {"profiles.csv", text_hash(profiles)}};
  write_file_atomic(dir / "run_manifest.json", m.dump(2) + "\n");

  out << report_table;
  return kOk;
}

// ---------------------------------------------------------------------------

int cmd_report(const std::vector<std::string>& inputs, const std::string& out_path,
               std::ostream& out) {
  std::vector<EvaluationReport> reports;
  for (const auto& path : inputs) reports.push_back(report_from_json(read_file(path)));
  const std::string table = report_csv(reports);
  if (out_path.empty()) out << table;
  else write_file_atomic(out_path, table);
  return kOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"pplmark: perplexity-based screening experiments on interview transcripts"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Normalize a CHAT corpus tree");
  ingest_cmd->add_option("--input", ingest.input, "Root holding Control/ and Dementia/")
      ->required();
  ingest_cmd->add_option("--out", ingest.out, "Output directory")->required();
  ingest_cmd->add_option("--task", ingest.task, "Task subdirectory inside each class, e.g. cookie");
  ingest_cmd->add_option("--min-sessions", ingest.min_sessions,
                         "Sessions a subject needs to count in the statistics");
  ingest_cmd->add_option("--control-dir", ingest.control_dir);
  ingest_cmd->add_option("--dementia-dir", ingest.dementia_dir);

  TrainArgs train;
  ScorerFlags train_scorer;
  auto* train_cmd = app.add_subcommand("train", "Train and save one n-gram model");
  train_cmd->add_option("--corpus", train.corpus, "Corpus JSON from ingest")->required();
  train_cmd->add_option("--group", train.group, "control | ad | all");
  train_cmd->add_option("--exclude", train.exclude, "Subject to leave out");
  train_cmd->add_option("--out", train.out, "Model file")->required();
  train_cmd->add_option("--min-sessions", train.min_sessions);
  train_cmd->add_flag("--uniform", train.uniform, "Write a count-free uniform model");
  add_scorer_flags(train_cmd, train_scorer);

  std::string model_path;
  std::string text_path;
  auto* score_cmd = app.add_subcommand("score", "Perplexity of a text under a saved model");
  score_cmd->add_option("--model", model_path)->required();
  score_cmd->add_option("--text", text_path, "One utterance per line, or a .cha file")->required();

  EvaluateArgs eval;
  ScorerFlags eval_scorer;
  auto* eval_cmd = app.add_subcommand("evaluate", "Run the leave-one-subject-out experiment");
  eval_cmd->add_option("--config", eval.config, "JSON configuration; flags take precedence");
  eval_cmd->add_option("--corpus", eval.corpus, "Corpus JSON or CHAT tree");
  eval_cmd->add_option("--out", eval.out, "Output directory");
  eval_cmd->add_option("--k-sigma", eval.k_sigma, "Standard deviations for the shifted rule");
  eval_cmd->add_option("--sigma-form", eval.sigma_form, "population | sample");
  eval_cmd->add_option("--tie-policy", eval.tie_policy, "ad | control");
  eval_cmd->add_option("--workers", eval.workers, "Folds run in parallel");
  eval_cmd->add_option("--cache-dir", eval.cache_dir, "Fold score cache");
  eval_cmd->add_option("--min-sessions", eval.min_sessions);
  add_scorer_flags(eval_cmd, eval_scorer);

  std::vector<std::string> report_inputs;
  std::string report_out;
  auto* report_cmd = app.add_subcommand("report", "Merge report JSON files into one table");
  report_cmd->add_option("inputs", report_inputs, "report.json files")->required();
  report_cmd->add_option("--out", report_out, "CSV path (default: stdout)");

  try {
    train_scorer.seed = eval_scorer.seed = default_seed();
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (app.got_subcommand(ingest_cmd)) return cmd_ingest(ingest, out, err);
    if (app.got_subcommand(train_cmd)) return cmd_train(train, train_scorer, out);
    if (app.got_subcommand(score_cmd)) return cmd_score(model_path, text_path, out);
    if (app.got_subcommand(eval_cmd)) return cmd_evaluate(eval, eval_scorer, *eval_cmd, out, err);
    if (app.got_subcommand(report_cmd)) return cmd_report(report_inputs, report_out, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kIoFormat;
  }
  return kUsage;
}

}  // namespace pplmark::cli
