// tools/blxam.cpp

// Copyright 2026  The blxam authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// blxam: bilingual acoustic-model pipeline driver.
//
//   blxam lexicon  — build lexicon/inventory/space-map files from word lists
//   blxam gen      — generate the synthetic bilingual corpus
//   blxam train    — run one training stage (checkpoint in, checkpoint out)
//   blxam eval     — decode and score a test split
//   blxam trends   — compare eval reports (relative WER reduction)
//
// Commands are deterministic: identical config + seed reproduce each
// output byte for byte. Exit codes: 0 success, 1 usage/config error,
// 2 data error, 3 invariant violation.

#include <fcntl.h>
#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "blxam/config.hpp"
#include "blxam/decode.hpp"

namespace blxam {
namespace {

// Holds <dir>/.lock exclusively for this process; concurrent commands on
// one output directory fail fast instead of interleaving writes.
class DirLock {
 public:
  explicit DirLock(const std::string &dir) {
    std::filesystem::create_directories(dir);
    path_ = dir + "/.lock";
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0)
      throw ConfigError("output directory '" + dir +
                        "' is in use by another command (remove '" + path_ +
                        "' if that command is gone)");
    const std::string pid = std::to_string(::getpid()) + "\n";
    (void)!::write(fd_, pid.data(), pid.size());
  }
  DirLock(const DirLock &) = delete;
  DirLock &operator=(const DirLock &) = delete;
  ~DirLock() {
    if (fd_ >= 0) {
      ::close(fd_);
      ::unlink(path_.c_str());
    }
  }

 private:
  std::string path_;
  int fd_ = -1;
};

struct CommonOpts {
  std::string config_path;
  std::string out_dir;  // overrides [run] out_dir when set
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::vector<std::string> overrides;
};

void add_common(CLI::App *cmd, CommonOpts &o) {
  cmd->add_option("-c,--config", o.config_path,
                  "Run configuration file (INI-style sections)");
  cmd->add_option("-o,--out-dir", o.out_dir,
                  "Output directory (overrides [run] out_dir)");
  cmd->add_option("-s,--seed", o.seed, "Seed (overrides [run] seed)")
      ->each([&o](const std::string &) { o.seed_set = true; });
  cmd->add_option("--set", o.overrides,
                  "Config override as section.key=value (repeatable)");
}

/// File config, then --set pairs, then the dedicated flags; the result is
/// what every command actually runs with and what gets echoed to disk.
RunConfig effective_config(const CommonOpts &o) {
  RunConfig cfg;
  if (!o.config_path.empty())
    apply_config_text(cfg, read_text_file(o.config_path), o.config_path);
  config_detail::Errors errs;
  for (const std::string &ov : o.overrides)
    apply_config_override(cfg, ov, errs);
  errs.raise_if_any();
  if (o.seed_set) cfg.seed = o.seed;
  if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
  return cfg;
}

void echo_config(const RunConfig &cfg, const std::string &command) {
  atomic_write_text(cfg.out_dir + "/effective-" + command + ".cfg",
                    render_run_config(cfg));
}

std::string corpus_dir(const RunConfig &cfg) { return cfg.out_dir + "/corpus"; }
std::string ckpt_prefix(const RunConfig &cfg, const std::string &name) {
  return cfg.out_dir + "/ckpt/" + name;
}

void require_file(const std::string &path, const std::string &hint) {
  if (!std::filesystem::exists(path))
    throw DataError("missing prerequisite '" + path + "': " + hint);
}

// -----------------------------------------------------------------------
// lexicon
// -----------------------------------------------------------------------

std::vector<std::string> read_word_list(const std::string &path) {
  std::ifstream f(path);
  if (!f.good()) throw DataError("cannot open word list '" + path + "'");
  std::vector<std::string> words;
  std::vector<std::string> problems;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    try {
      romanize(line);  // report problems with their line numbers
      words.push_back(line);
    } catch (const Error &e) {
      problems.push_back(path + ":" + std::to_string(lineno) + ": " +
                         e.what());
    }
  }
  if (!problems.empty()) {
    std::string all = "unusable words:";
    for (const std::string &p : problems) all += "\n  " + p;
    throw DataError(all);
  }
  if (words.empty()) throw DataError("word list '" + path + "' is empty");
  return words;
}

int cmd_lexicon(const std::string &words_a_path,
                const std::string &words_b_path, const std::string &locale_a,
                const std::string &locale_b, const std::string &out) {
  const std::vector<std::string> words_a = read_word_list(words_a_path);
  const std::vector<std::string> words_b = read_word_list(words_b_path);
  GraphemeLexicon lex_a = build_lexicon(words_a, locale_a);
  GraphemeLexicon lex_b = build_lexicon(words_b, locale_b);
  BilingualSpaceMap space = merge_inventories(lex_a, lex_b);

  DirLock lock(out);
  save_lexicon(out + "/lexicon_a.lex", lex_a);
  save_lexicon(out + "/lexicon_b.lex", lex_b);
  save_inventory(out + "/bilingual.units", space.bilingual);
  save_space_map(out + "/space.map", space);

  char stat[64];
  std::snprintf(stat, sizeof stat, "%.6f", space.sharing);
  std::cout << "lexicon_a\t" << locale_a << "\t" << lex_a.entries.size()
            << " words\n"
            << "lexicon_b\t" << locale_b << "\t" << lex_b.entries.size()
            << " words\n"
            << "bilingual_units\t" << space.bilingual.size() << "\n"
            << "sharing\t" << stat << "\n";
  return 0;
}

// -----------------------------------------------------------------------
// gen
// -----------------------------------------------------------------------

std::pair<SyntheticLocaleSpec, SyntheticLocaleSpec> make_specs(
    const RunConfig &cfg) {
  return gen_locale_specs(cfg.seed, cfg.n_words, cfg.shared_fraction,
                          cfg.locale_a, cfg.locale_b, cfg.feature_dim,
                          cfg.noise_var);
}

int cmd_gen(const CommonOpts &opts) {
  const RunConfig cfg = effective_config(opts);
  DirLock lock(cfg.out_dir);
  echo_config(cfg, "gen");

  auto [spec_a, spec_b] = make_specs(cfg);
  BilingualSpaceMap space = merge_inventories(spec_a.lexicon, spec_b.lexicon);
  save_lexicon(cfg.out_dir + "/lexicon_a.lex", spec_a.lexicon);
  save_lexicon(cfg.out_dir + "/lexicon_b.lex", spec_b.lexicon);
  save_inventory(cfg.out_dir + "/bilingual.units", space.bilingual);
  save_space_map(cfg.out_dir + "/space.map", space);

  const CorpusManifest manifest =
      build_corpus(spec_a, spec_b, space.bilingual, cfg.sizes,
                   mix_seed(cfg.seed, 0xC0     /* corpus stream */),
                   corpus_dir(cfg));

  std::size_t train = 0, dev = 0, test = 0;
  for (const ManifestEntry &e : manifest.entries) {
    if (e.split == "train") ++train;
    if (e.split == "dev") ++dev;
    if (e.split == "test") ++test;
  }
  char stat[64];
  std::snprintf(stat, sizeof stat, "%.6f", space.sharing);
  std::cout << "corpus\t" << corpus_dir(cfg) << "\n"
            << "utterances\ttrain " << train << "\tdev " << dev << "\ttest "
            << test << "\n"
            << "bilingual_units\t" << space.bilingual.size() << "\n"
            << "sharing\t" << stat << "\n";
  return 0;
}

// -----------------------------------------------------------------------
// train
// -----------------------------------------------------------------------

std::vector<Utterance> load_split(const CorpusManifest &manifest,
                                  const std::string &dir,
                                  const std::string &split,
                                  bool monolingual_only) {
  std::vector<ManifestEntry> entries;
  for (const ManifestEntry &e : manifest.entries) {
    if (e.split != split) continue;
    if (monolingual_only && e.condition == "code-mixed") continue;
    entries.push_back(e);
  }
  std::sort(entries.begin(), entries.end(),
            [](const ManifestEntry &a, const ManifestEntry &b) {
              return a.path < b.path;
            });
  std::vector<Utterance> utts;
  utts.reserve(entries.size());
  for (const ManifestEntry &e : entries)
    utts.push_back(load_utterance(dir + "/" + e.path));
  return utts;
}

/// Stage initialization: pretrain starts fresh; lid-finetune requires the
/// pretrain checkpoint; aux-joint continues from the newest earlier stage
/// and otherwise starts fresh. `init` overrides with an explicit prefix.
AcousticModel initial_model(const RunConfig &cfg, const std::string &stage,
                            const std::string &init,
                            const BilingualSpaceMap &space) {
  if (!init.empty()) {
    require_file(init + ".meta", "no checkpoint at --init prefix");
    std::cout << "init\t" << init << "\n";
    return AcousticModel::load(init);
  }
  const std::string pre = ckpt_prefix(cfg, "bilingual-pretrain");
  const std::string lid = ckpt_prefix(cfg, "lid-finetune");
  if (stage == "lid-finetune") {
    require_file(pre + ".meta",
                 "run `blxam train --stage bilingual-pretrain` first");
    std::cout << "init\t" << pre << "\n";
    return AcousticModel::load(pre);
  }
  if (stage == "aux-joint") {
    for (const std::string &prev : {lid, pre})
      if (std::filesystem::exists(prev + ".meta")) {
        std::cout << "init\t" << prev << "\n";
        return AcousticModel::load(prev);
      }
  }
  std::cout << "init\tfresh\n";
  Rng rng(mix_seed(cfg.seed, 0x11  /* init stream */));
  return AcousticModel(cfg.effective_model(), space, rng);
}

int cmd_train(const CommonOpts &opts, const std::string &stage_flag,
              const std::string &init) {
  RunConfig cfg = effective_config(opts);
  if (!stage_flag.empty()) cfg.train.stage = stage_flag;
  parse_stage(cfg.train.stage);  // reject unknown stages before any writes

  const std::string manifest_path = corpus_dir(cfg) + "/corpus.manifest";
  require_file(manifest_path, "run `blxam gen` first");
  require_file(cfg.out_dir + "/space.map", "run `blxam gen` first");

  DirLock lock(cfg.out_dir);
  echo_config(cfg, "train-" + cfg.train.stage);

  const CorpusManifest manifest = load_manifest(manifest_path);
  BilingualSpaceMap space = load_space_map(cfg.out_dir + "/space.map");
  BLXAM_DATA_CHECK(manifest.space_hash == space.bilingual.checksum(),
                   "unit-space mismatch between '"
                       << manifest_path << "' and '" << cfg.out_dir
                       << "/space.map'");

  AcousticModel model = initial_model(cfg, cfg.train.stage, init, space);
  BLXAM_DATA_CHECK(
      model.space.bilingual.checksum() == manifest.space_hash,
      "checkpoint unit space does not match the corpus; regenerate or "
      "retrain from scratch");

  // Hard routing in pretraining is per-utterance, so that stage trains on
  // the monolingual subset; code-mixed training data serves later stages.
  const bool mono_only = cfg.train.stage == "bilingual-pretrain";
  const std::vector<Utterance> train =
      load_split(manifest, corpus_dir(cfg), "train", mono_only);
  std::cout << "train_utterances\t" << train.size()
            << (mono_only ? "\t(monolingual conditions)" : "") << "\n";

  TrainingPlan plan = cfg.train;
  plan.seed = mix_seed(cfg.seed, fnv1a64(plan.stage.data(),
                                         plan.stage.size()));
  const TrainLog log = train_stage(model, train, plan);

  std::filesystem::create_directories(cfg.out_dir + "/ckpt");
  const std::string prefix = ckpt_prefix(cfg, plan.stage);
  model.save(prefix);
  save_train_log(cfg.out_dir + "/train-" + plan.stage + ".log", log);

  const EpochRecord &last = log.epochs.back();
  char total[64];
  std::snprintf(total, sizeof total, "%.6f", last.total);
  std::cout << "stage\t" << plan.stage << "\tepochs\t" << log.epochs.size()
            << "\tfinal_loss\t" << total << "\n"
            << "checkpoint\t" << prefix << "\n";
  return 0;
}

// -----------------------------------------------------------------------
// eval
// -----------------------------------------------------------------------

int cmd_eval(const CommonOpts &opts, const std::string &checkpoint,
             const std::string &mode_flag, const std::string &label_flag,
             const std::string &split) {
  RunConfig cfg = effective_config(opts);
  if (!mode_flag.empty()) cfg.decode.mode = parse_output_mode(mode_flag);

  const std::string manifest_path = corpus_dir(cfg) + "/corpus.manifest";
  require_file(manifest_path, "run `blxam gen` first");
  require_file(cfg.out_dir + "/lexicon_a.lex", "run `blxam gen` first");

  // A bare name resolves under <out_dir>/ckpt; anything with a slash is
  // an explicit prefix.
  std::string prefix = checkpoint;
  if (prefix.find('/') == std::string::npos) prefix = ckpt_prefix(cfg, prefix);
  require_file(prefix + ".meta",
               "no checkpoint named '" + checkpoint +
                   "'; run `blxam train` first");

  const std::string label =
      label_flag.empty() ? output_mode_name(cfg.decode.mode) : label_flag;

  DirLock lock(cfg.out_dir);
  echo_config(cfg, "eval-" + label);

  const CorpusManifest manifest = load_manifest(manifest_path);
  const AcousticModel model = AcousticModel::load(prefix);
  const GraphemeLexicon lex_a =
      load_lexicon(cfg.out_dir + "/lexicon_a.lex", manifest.locale_a);
  const GraphemeLexicon lex_b =
      load_lexicon(cfg.out_dir + "/lexicon_b.lex", manifest.locale_b);

  EvalReport report = evaluate(model, lex_a, lex_b, manifest, corpus_dir(cfg),
                               cfg.decode, split);
  report.label = label;

  const std::string report_path = cfg.out_dir + "/eval-" + label + ".report";
  save_eval_report(report_path, report);
  std::cout << format_eval_table(report) << "report\t" << report_path << "\n";
  return 0;
}

// -----------------------------------------------------------------------
// trends
// -----------------------------------------------------------------------

int cmd_trends(const std::vector<std::string> &report_paths,
               const std::string &out_path) {
  std::vector<EvalReport> reports;
  for (const std::string &p : report_paths)
    reports.push_back(load_eval_report(p));
  const std::vector<TrendRow> rows = compare_modes(reports);

  char line[200];
  std::snprintf(line, sizeof line, "%-12s %-14s %-14s %10s %9s %9s\n",
                "condition", "base", "new", "base_WER%", "new_WER%",
                "WERR%");
  std::cout << line;
  for (const TrendRow &t : rows) {
    std::snprintf(line, sizeof line, "%-12s %-14s %-14s %10.2f %9.2f %9.2f\n",
                  t.condition.c_str(), t.base_label.c_str(),
                  t.new_label.c_str(), t.wer_base, t.wer_new, 100.0 * t.werr);
    std::cout << line;
  }
  if (!out_path.empty())
    atomic_write_text(out_path, format_trend_summary(rows));
  return 0;
}

}  // namespace
}  // namespace blxam

int main(int argc, char **argv) {
  using namespace blxam;
  CLI::App app{"Bilingual acoustic-model pipeline (lexicon, synthetic "
               "corpus, staged training, evaluation, trends)"};
  app.require_subcommand(1);

  // lexicon
  std::string words_a, words_b, locale_a = "it", locale_b = "en", lex_out;
  CLI::App *lexicon =
      app.add_subcommand("lexicon", "Build lexicon, unit inventory and "
                                    "bilingual space map from word lists");
  lexicon->add_option("--words-a", words_a, "Word list for locale A")
      ->required();
  lexicon->add_option("--words-b", words_b, "Word list for locale B")
      ->required();
  lexicon->add_option("--locale-a", locale_a, "Locale A name");
  lexicon->add_option("--locale-b", locale_b, "Locale B name");
  lexicon->add_option("-o,--out-dir", lex_out, "Output directory")->required();

  // gen / train / eval share the config options.
  CommonOpts gen_opts, train_opts, eval_opts;
  CLI::App *gen = app.add_subcommand(
      "gen", "Generate the synthetic bilingual corpus and its lexicons");
  add_common(gen, gen_opts);

  std::string stage, init;
  CLI::App *train =
      app.add_subcommand("train", "Run one training stage and save its "
                                  "checkpoint");
  add_common(train, train_opts);
  train->add_option("--stage", stage,
                    "bilingual-pretrain | lid-finetune | aux-joint "
                    "(overrides [train] stage)");
  train->add_option("--init", init,
                    "Checkpoint prefix to start from (overrides the stage "
                    "default)");

  std::string checkpoint = "aux-joint", mode, label, split = "test";
  CLI::App *eval_cmd = app.add_subcommand(
      "eval", "Decode a corpus split with a trained checkpoint and score it");
  add_common(eval_cmd, eval_opts);
  eval_cmd->add_option("--checkpoint", checkpoint,
                       "Checkpoint name under <out_dir>/ckpt, or a path "
                       "prefix containing '/'");
  eval_cmd->add_option("--mode", mode,
                       "bilingual | mono-a | mono-b | lid-combined "
                       "(overrides [decode] mode)");
  eval_cmd->add_option("--label", label,
                       "Report label (defaults to the mode name)");
  eval_cmd->add_option("--split", split, "Corpus split to score");

  std::vector<std::string> report_paths;
  std::string trends_out;
  CLI::App *trends = app.add_subcommand(
      "trends", "Relative WER reduction between eval reports (first one is "
                "the baseline)");
  trends->add_option("reports", report_paths, "Eval report files")
      ->required()
      ->expected(-2);
  trends->add_option("--out", trends_out, "Also write the records here");

  try {
    app.parse(argc, argv);
    if (lexicon->parsed())
      return cmd_lexicon(words_a, words_b, locale_a, locale_b, lex_out);
    if (gen->parsed()) return cmd_gen(gen_opts);
    if (train->parsed()) return cmd_train(train_opts, stage, init);
    if (eval_cmd->parsed())
      return cmd_eval(eval_opts, checkpoint, mode, label, split);
    if (trends->parsed()) return cmd_trends(report_paths, trends_out);
    return 1;
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const ConfigError &e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const DataError &e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const Error &e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return 3;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
