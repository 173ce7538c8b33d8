// blxam/decode.hpp

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

#ifndef BLXAM_DECODE_HPP_
#define BLXAM_DECODE_HPP_

// Frame posteriors to unit and word hypotheses, WER / frame-accuracy /
// LID-accuracy scoring across inference modes, and mode-comparison
// summaries.
//
// The default decoder is frame-synchronous: per-frame argmax, run-length
// collapse, SIL removal, then exact lexicon lookup per word segment. A
// small beam search with an optional add-one-smoothed bigram word LM is
// available for sensitivity checks. Collapse is run-level: a unit that
// recurs after an intervening (deleted) silence run is a second
// occurrence and stays, so sequences like "a a" survive decoding.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "blxam/error.hpp"
#include "blxam/fileio.hpp"
#include "blxam/lexicon.hpp"
#include "blxam/model.hpp"
#include "blxam/synthdata.hpp"
#include "blxam/tensor.hpp"
#include "blxam/training.hpp"

namespace blxam {

// ---------------------------------------------------------------------
// Configuration and hypothesis types
// ---------------------------------------------------------------------

struct DecodeConfig {
  OutputMode mode = OutputMode::kBilingual;
  std::string search = "greedy";  // greedy | beam
  std::size_t beam_width = 4;
  double lm_weight = 0.0;   // bigram word LM weight; 0 disables the LM
  std::size_t chunk_frames = 8;  // streaming feed granularity

  void validate() const {
    BLXAM_CONFIG_CHECK(search == "greedy" || search == "beam",
                       "unknown search '" << search
                                          << "' (expected greedy or beam)");
    BLXAM_CONFIG_CHECK(beam_width >= 1, "beam_width must be at least 1");
    BLXAM_CONFIG_CHECK(lm_weight >= 0.0, "lm_weight must be nonnegative");
    BLXAM_CONFIG_CHECK(chunk_frames >= 1, "chunk_frames must be at least 1");
  }
};

/// Hypothesis word with its locale guess (empty when unknown) and an OOV
/// flag for segments that match no lexicon entry.
struct RecoveredWord {
  std::string word;
  std::string locale;
  bool oov = false;

  bool operator==(const RecoveredWord &o) const = default;
};

inline constexpr const char *kForeignWord = "<foreign>";

struct Hypothesis {
  std::vector<std::string> units;  // collapsed; no SIL, FOREIGN as marker
  std::vector<RecoveredWord> words;
  double score = 0.0;

  std::vector<std::string> word_strings() const {
    std::vector<std::string> out;
    out.reserve(words.size());
    for (const RecoveredWord &w : words) out.push_back(w.word);
    return out;
  }
};

// ---------------------------------------------------------------------
// Path collapse and word recovery
// ---------------------------------------------------------------------

/// Run-length collapse of a frame-level id path: merge consecutive
/// repeats, then delete SIL. FOREIGN runs (per-locale spaces) stay as one
/// marker entry recording the foreign segment.
inline std::vector<std::string> collapse_path(const std::vector<int> &path,
                                              const UnitInventory &inv) {
  std::vector<std::string> out;
  int last = -1;
  for (std::size_t t = 0; t < path.size(); ++t) {
    const int id = path[t];
    BLXAM_DATA_CHECK(id >= 0 && static_cast<std::size_t>(id) < inv.size(),
                     "collapse_path: id " << id << " out of range [0, "
                                          << inv.size() << ") at frame " << t);
    if (id == last) continue;  // same run
    last = id;
    if (id == kSilId) continue;  // deleted after the merge
    out.push_back(inv.units[static_cast<std::size_t>(id)]);
  }
  return out;
}

/// Segments a collapsed unit sequence at word-initial/singleton markers
/// and exact-matches each segment against the lexicons in order. An
/// unmatched segment becomes its literal letter string flagged OOV; a
/// FOREIGN marker becomes the reserved word "<foreign>".
inline std::vector<RecoveredWord> units_to_words(
    const std::vector<std::string> &units,
    const std::vector<const GraphemeLexicon *> &lexicons) {
  std::vector<RecoveredWord> words;
  std::vector<UnitToken> seg;
  auto flush = [&]() {
    if (seg.empty()) return;
    std::string letters;
    for (const UnitToken &t : seg) letters.push_back(t.letter);
    RecoveredWord rec{letters, "", true};
    for (const GraphemeLexicon *lex : lexicons) {
      auto it = lex->entries.find(letters);
      if (it != lex->entries.end() && it->second == seg) {
        rec.locale = lex->locale;
        rec.oov = false;
        break;
      }
    }
    words.push_back(std::move(rec));
    seg.clear();
  };
  for (const std::string &u : units) {
    BLXAM_DATA_CHECK(u != kSilUnit, "units_to_words: SIL in unit sequence");
    if (u == kForeignUnit) {
      flush();
      words.push_back({kForeignWord, "", false});
      continue;
    }
    const UnitToken tok = UnitToken::parse(u);
    if (tok.position == UnitPosition::kInitial ||
        tok.position == UnitPosition::kSingleton)
      flush();
    seg.push_back(tok);
  }
  flush();
  return words;
}

// ---------------------------------------------------------------------
// Bigram word LM (add-one smoothed)
// ---------------------------------------------------------------------

struct BigramLm {
  std::map<std::string, std::map<std::string, std::size_t>> bigrams;
  std::map<std::string, std::size_t> context_totals;
  std::set<std::string> vocab;

  /// Adds one sentence; the empty string is the sentence-start context.
  void add_sentence(const std::vector<std::string> &words) {
    std::string prev;
    for (const std::string &w : words) {
      BLXAM_DATA_CHECK(!w.empty(), "bigram lm: empty word");
      bigrams[prev][w] += 1;
      context_totals[prev] += 1;
      vocab.insert(w);
      prev = w;
    }
  }

  /// log P(next | prev) with add-one smoothing over vocab + one unseen
  /// slot. An empty model scores everything log(1) = 0.
  double logp(const std::string &prev, const std::string &next) const {
    double num = 1.0;
    double den = static_cast<double>(vocab.size()) + 1.0;
    auto ct = context_totals.find(prev);
    if (ct != context_totals.end()) {
      den += static_cast<double>(ct->second);
      auto bg = bigrams.find(prev);
      if (bg != bigrams.end()) {
        auto nx = bg->second.find(next);
        if (nx != bg->second.end()) num += static_cast<double>(nx->second);
      }
    }
    return std::log(num / den);
  }
};

// ---------------------------------------------------------------------
// Search
// ---------------------------------------------------------------------

/// Per-frame argmax path and its summed log-probability. Ties take the
/// lowest class id.
inline std::pair<std::vector<int>, double> greedy_path(const Tensor &logp) {
  BLXAM_DATA_CHECK(logp.rank() == 2, "greedy_path: expected matrix, got "
                                         << logp.shape_str());
  std::vector<int> path(logp.rows());
  double score = 0.0;
  for (std::size_t t = 0; t < logp.rows(); ++t) {
    const double *row = logp.row(t);
    std::size_t best = 0;
    for (std::size_t c = 1; c < logp.cols(); ++c)
      if (row[c] > row[best]) best = c;
    path[t] = static_cast<int>(best);
    score += row[best];
  }
  return {std::move(path), score};
}

namespace decode_detail {

struct BeamHyp {
  std::vector<int> units;          // collapsed ids (FOREIGN marker included)
  int last_id = -1;                // last frame-level id, for run merging
  double acoustic = 0.0;
  double lm = 0.0;                 // already weighted
  std::vector<RecoveredWord> words;
  std::size_t seg_begin = 0;       // open segment start within `units`
  std::string prev_word;           // bigram context, "" at sentence start

  double total() const { return acoustic + lm; }
};

}  // namespace decode_detail

// ---------------------------------------------------------------------
// WER
// ---------------------------------------------------------------------

struct WerCounts {
  std::size_t sub = 0, ins = 0, del = 0;
  std::size_t ref_words = 0;

  std::size_t errors() const { return sub + ins + del; }
  double pct() const {
    return 100.0 * static_cast<double>(errors()) /
           static_cast<double>(ref_words);
  }
};

/// Levenshtein word alignment with unit costs. Equal-cost backtraces
/// prefer substitution over insertion over deletion.
inline WerCounts wer(const std::vector<std::string> &ref,
                     const std::vector<std::string> &hyp) {
  BLXAM_DATA_CHECK(!ref.empty(), "wer: empty reference");
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::size_t> d((n + 1) * (m + 1));
  auto at = [m](std::size_t i, std::size_t j) { return i * (m + 1) + j; };
  for (std::size_t i = 0; i <= n; ++i) d[at(i, 0)] = i;
  for (std::size_t j = 0; j <= m; ++j) d[at(0, j)] = j;
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub_cost =
          d[at(i - 1, j - 1)] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      const std::size_t ins_cost = d[at(i, j - 1)] + 1;
      const std::size_t del_cost = d[at(i - 1, j)] + 1;
      d[at(i, j)] = std::min(sub_cost, std::min(ins_cost, del_cost));
    }
  WerCounts w;
  w.ref_words = n;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        d[at(i, j)] ==
            d[at(i - 1, j - 1)] + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
      if (ref[i - 1] != hyp[j - 1]) ++w.sub;
      --i;
      --j;
    } else if (j > 0 && d[at(i, j)] == d[at(i, j - 1)] + 1) {
      ++w.ins;
      --j;
    } else {
      ++w.del;
      --i;
    }
  }
  return w;
}

// ---------------------------------------------------------------------
// Utterance decoding
// ---------------------------------------------------------------------

/// Everything evaluation needs from one utterance pass: the hypothesis,
/// the mode's frame log-probabilities, and the LID stream.
struct DecodeResult {
  Hypothesis hyp;
  Tensor logp;       // [frames x mode width]
  Tensor lid_probs;  // [frames x 3]
};

inline const UnitInventory &mode_inventory(const BilingualSpaceMap &space,
                                           OutputMode mode) {
  switch (mode) {
    case OutputMode::kMonoA:
      return space.space_a;
    case OutputMode::kMonoB:
      return space.space_b;
    case OutputMode::kBilingual:
    case OutputMode::kLidCombined:
      break;
  }
  return space.bilingual;
}

namespace decode_detail {

/// Beam search over collapsed unit sequences. States are keyed by
/// (collapsed ids, last frame id); word segmentation is a pure function
/// of the collapsed ids, so the key identifies the LM context too.
inline Hypothesis beam_decode(const Tensor &logp, const UnitInventory &inv,
                              const std::vector<const GraphemeLexicon *> &lexs,
                              std::size_t width, const BigramLm *lm,
                              double lm_weight) {
  const std::size_t k = inv.size();
  const bool has_foreign = inv.has_foreign();

  // Per-class segmentation facts, computed once.
  std::vector<bool> starts_word(k, false);
  for (std::size_t c = 0; c < k; ++c) {
    if (c == static_cast<std::size_t>(kSilId)) continue;
    if (has_foreign && c == static_cast<std::size_t>(kForeignId)) continue;
    const UnitToken t = UnitToken::parse(inv.units[c]);
    starts_word[c] = t.position == UnitPosition::kInitial ||
                     t.position == UnitPosition::kSingleton;
  }

  auto lm_logp = [&](const std::string &prev, const std::string &next) {
    return lm != nullptr && lm_weight > 0.0 ? lm_weight * lm->logp(prev, next)
                                            : 0.0;
  };
  // Completes the open segment (if any) into a word.
  auto flush_segment = [&](BeamHyp &h) {
    if (h.seg_begin >= h.units.size()) return;
    std::vector<UnitToken> seg;
    std::string letters;
    for (std::size_t p = h.seg_begin; p < h.units.size(); ++p) {
      seg.push_back(
          UnitToken::parse(inv.units[static_cast<std::size_t>(h.units[p])]));
      letters.push_back(seg.back().letter);
    }
    RecoveredWord rec{letters, "", true};
    for (const GraphemeLexicon *lex : lexs) {
      auto it = lex->entries.find(letters);
      if (it != lex->entries.end() && it->second == seg) {
        rec.locale = lex->locale;
        rec.oov = false;
        break;
      }
    }
    h.lm += lm_logp(h.prev_word, rec.word);
    h.prev_word = rec.word;
    h.words.push_back(std::move(rec));
    h.seg_begin = h.units.size();
  };

  std::vector<BeamHyp> beam(1);
  using Key = std::pair<std::vector<int>, int>;
  for (std::size_t t = 0; t < logp.rows(); ++t) {
    const double *row = logp.row(t);
    std::map<Key, BeamHyp> next;
    for (const BeamHyp &h : beam) {
      for (std::size_t c = 0; c < k; ++c) {
        BeamHyp nh = h;
        nh.acoustic += row[c];
        const int ci = static_cast<int>(c);
        if (ci != h.last_id) {
          nh.last_id = ci;
          if (ci != kSilId) {
            if (has_foreign && ci == kForeignId) {
              flush_segment(nh);
              nh.units.push_back(ci);
              nh.lm += lm_logp(nh.prev_word, kForeignWord);
              nh.prev_word = kForeignWord;
              nh.words.push_back({kForeignWord, "", false});
              nh.seg_begin = nh.units.size();
            } else {
              if (starts_word[c]) flush_segment(nh);
              nh.units.push_back(ci);
            }
          }
        }
        Key key{nh.units, nh.last_id};
        auto it = next.find(key);
        if (it == next.end() || nh.total() > it->second.total())
          next.insert_or_assign(std::move(key), std::move(nh));
      }
    }
    beam.clear();
    beam.reserve(next.size());
    for (auto &[key, h] : next) beam.push_back(std::move(h));
    std::stable_sort(beam.begin(), beam.end(),
                     [](const BeamHyp &a, const BeamHyp &b) {
                       return a.total() > b.total();
                     });  // map order breaks ties deterministically
    if (beam.size() > width) beam.resize(width);
  }

  for (BeamHyp &h : beam) flush_segment(h);
  const BeamHyp *best = &beam.front();
  for (const BeamHyp &h : beam)
    if (h.total() > best->total()) best = &h;

  Hypothesis hyp;
  for (int id : best->units)
    hyp.units.push_back(inv.units[static_cast<std::size_t>(id)]);
  hyp.words = best->words;
  hyp.score = best->total();
  return hyp;
}

}  // namespace decode_detail

/// Streams the features through the model in cfg.chunk_frames pieces and
/// decodes the requested mode. The lexicons recover words; mono modes use
/// only their own locale's lexicon.
inline DecodeResult decode_utterance(const AcousticModel &model,
                                     const GraphemeLexicon &lex_a,
                                     const GraphemeLexicon &lex_b,
                                     const Tensor &features,
                                     const DecodeConfig &cfg,
                                     const BigramLm *lm = nullptr) {
  cfg.validate();
  BLXAM_CONFIG_CHECK(cfg.chunk_frames <= model.config.chunk_frames,
                     "decode chunk_frames " << cfg.chunk_frames
                                            << " exceeds the model's "
                                            << model.config.chunk_frames);
  BLXAM_DATA_CHECK(lex_a.locale == model.config.locale_a &&
                       lex_b.locale == model.config.locale_b,
                   "lexicon locales (" << lex_a.locale << ", " << lex_b.locale
                                       << ") do not match the model ("
                                       << model.config.locale_a << ", "
                                       << model.config.locale_b << ")");
  const UnitInventory &inv = mode_inventory(model.space, cfg.mode);

  DecodeResult r;
  const std::size_t t_len = features.rows();
  r.logp = Tensor({t_len, inv.size()});
  r.lid_probs = Tensor({t_len, 3});
  StreamState st = model.new_stream();
  for (std::size_t begin = 0; begin < t_len; begin += cfg.chunk_frames) {
    const std::size_t rows = std::min(cfg.chunk_frames, t_len - begin);
    Tensor chunk({rows, features.cols()});
    std::copy_n(features.row(begin), rows * features.cols(), chunk.v.data());
    ForwardOutput fo = model.streaming_forward_all(chunk, st);
    const Tensor &src = cfg.mode == OutputMode::kBilingual ? fo.logp_bilingual
                        : cfg.mode == OutputMode::kMonoA   ? fo.logp_mono_a
                        : cfg.mode == OutputMode::kMonoB   ? fo.logp_mono_b
                                                           : fo.logp_combined;
    std::copy_n(src.v.data(), rows * inv.size(), r.logp.row(begin));
    std::copy_n(fo.lid_probs.v.data(), rows * 3, r.lid_probs.row(begin));
  }

  std::vector<const GraphemeLexicon *> lexs;
  if (cfg.mode == OutputMode::kMonoA)
    lexs = {&lex_a};
  else if (cfg.mode == OutputMode::kMonoB)
    lexs = {&lex_b};
  else
    lexs = {&lex_a, &lex_b};

  if (cfg.search == "greedy") {
    auto [path, score] = greedy_path(r.logp);
    r.hyp.units = collapse_path(path, inv);
    r.hyp.words = units_to_words(r.hyp.units, lexs);
    r.hyp.score = score;
  } else {
    r.hyp = decode_detail::beam_decode(r.logp, inv, lexs, cfg.beam_width, lm,
                                       cfg.lm_weight);
  }
  return r;
}

// ---------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------

struct EvalRow {
  std::string condition;  // mono-a | mono-b | code-mixed
  std::size_t utterances = 0;
  std::size_t ref_words = 0;
  std::size_t sub = 0, ins = 0, del = 0;
  std::size_t hyp_words = 0, oov_words = 0;
  std::size_t frames = 0, frames_correct = 0;
  std::size_t lid_correct = 0;

  double wer_pct() const {
    return ref_words == 0 ? 0.0
                          : 100.0 * static_cast<double>(sub + ins + del) /
                                static_cast<double>(ref_words);
  }
  double frame_acc_pct() const {
    return frames == 0 ? 0.0
                       : 100.0 * static_cast<double>(frames_correct) /
                             static_cast<double>(frames);
  }
  double lid_acc_pct() const {
    return frames == 0 ? 0.0
                       : 100.0 * static_cast<double>(lid_correct) /
                             static_cast<double>(frames);
  }

  bool operator==(const EvalRow &o) const = default;
};

struct EvalReport {
  std::string label;  // system name in comparisons; defaults to the mode
  std::string mode;
  std::string split;
  std::vector<EvalRow> rows;  // sorted by condition

  const EvalRow *find(const std::string &condition) const {
    for (const EvalRow &r : rows)
      if (r.condition == condition) return &r;
    return nullptr;
  }

  bool operator==(const EvalReport &o) const = default;
};

namespace decode_detail {

inline std::size_t argmax_row(const double *row, std::size_t n) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < n; ++c)
    if (row[c] > row[best]) best = c;
  return best;
}

}  // namespace decode_detail

/// Streams and scores every `split` utterance in the manifest, one row per
/// test condition. Manifest paths resolve against corpus_dir. Frame
/// accuracy is measured against the ground-truth alignment mapped into the
/// mode's unit space; LID accuracy against the locale tags. Aggregation
/// order is fixed by sorting on utterance path.
inline EvalReport evaluate(const AcousticModel &model,
                           const GraphemeLexicon &lex_a,
                           const GraphemeLexicon &lex_b,
                           const CorpusManifest &manifest,
                           const std::string &corpus_dir,
                           const DecodeConfig &cfg,
                           const std::string &split = "test",
                           const BigramLm *lm = nullptr) {
  cfg.validate();
  BLXAM_DATA_CHECK(manifest.locale_a == model.config.locale_a &&
                       manifest.locale_b == model.config.locale_b,
                   "corpus locales (" << manifest.locale_a << ", "
                                      << manifest.locale_b
                                      << ") do not match the model ("
                                      << model.config.locale_a << ", "
                                      << model.config.locale_b << ")");
  BLXAM_DATA_CHECK(manifest.space_hash == 0 ||
                       manifest.space_hash == model.space.bilingual.checksum(),
                   "unit-space mismatch: the corpus was built against a "
                   "different bilingual inventory than the model's");

  std::vector<ManifestEntry> entries;
  for (const ManifestEntry &e : manifest.entries)
    if (e.split == split) entries.push_back(e);
  BLXAM_DATA_CHECK(!entries.empty(),
                   "no '" << split << "' utterances in the manifest");
  std::sort(entries.begin(), entries.end(),
            [](const ManifestEntry &a, const ManifestEntry &b) {
              return a.path < b.path;
            });

  std::map<std::string, EvalRow> rows;
  for (const ManifestEntry &e : entries) {
    const Utterance u = load_utterance(corpus_dir + "/" + e.path);
    const FrameTargets targets = make_frame_targets(u, model.space);
    const DecodeResult dr =
        decode_utterance(model, lex_a, lex_b, u.features, cfg, lm);

    EvalRow &row = rows[e.condition];
    row.condition = e.condition;
    row.utterances += 1;

    std::vector<std::string> ref;
    for (const auto &[word, locale] : u.words) ref.push_back(word);
    const WerCounts w = wer(ref, dr.hyp.word_strings());
    row.ref_words += w.ref_words;
    row.sub += w.sub;
    row.ins += w.ins;
    row.del += w.del;
    row.hyp_words += dr.hyp.words.size();
    for (const RecoveredWord &rw : dr.hyp.words)
      if (rw.oov) row.oov_words += 1;

    const std::vector<int> &frame_ids =
        cfg.mode == OutputMode::kMonoA   ? targets.mono_a
        : cfg.mode == OutputMode::kMonoB ? targets.mono_b
                                         : targets.bilingual;
    for (std::size_t t = 0; t < u.frames(); ++t) {
      row.frames += 1;
      if (decode_detail::argmax_row(dr.logp.row(t), dr.logp.cols()) ==
          static_cast<std::size_t>(frame_ids[t]))
        row.frames_correct += 1;
      if (decode_detail::argmax_row(dr.lid_probs.row(t), 3) ==
          static_cast<std::size_t>(targets.lid[t]))
        row.lid_correct += 1;
    }
  }

  EvalReport report;
  report.mode = output_mode_name(cfg.mode);
  report.label = report.mode;
  report.split = split;
  for (auto &[cond, row] : rows) report.rows.push_back(std::move(row));
  return report;
}

// ---------------------------------------------------------------------
// Mode comparison
// ---------------------------------------------------------------------

/// Relative WER reduction of one system against a baseline, per test
/// condition. Positive means the new system is better.
struct TrendRow {
  std::string condition;
  std::string base_label, new_label;
  double wer_base = 0.0, wer_new = 0.0;
  double werr = 0.0;  // (base - new) / base
};

inline std::vector<TrendRow> compare_modes(
    const std::vector<EvalReport> &reports) {
  BLXAM_DATA_CHECK(reports.size() >= 2,
                   "compare_modes: need at least two reports, got "
                       << reports.size());
  const EvalReport &base = reports.front();
  std::vector<TrendRow> out;
  for (std::size_t r = 1; r < reports.size(); ++r) {
    const EvalReport &next = reports[r];
    BLXAM_DATA_CHECK(next.rows.size() == base.rows.size(),
                     "compare_modes: reports cover different test sets");
    for (const EvalRow &row : base.rows) {
      const EvalRow *other = next.find(row.condition);
      BLXAM_DATA_CHECK(other != nullptr,
                       "compare_modes: condition '"
                           << row.condition << "' missing from report '"
                           << next.label << "'");
      BLXAM_DATA_CHECK(other->utterances == row.utterances &&
                           other->ref_words == row.ref_words,
                       "compare_modes: reports cover different test sets for "
                       "condition '"
                           << row.condition << "'");
      TrendRow t;
      t.condition = row.condition;
      t.base_label = base.label;
      t.new_label = next.label;
      t.wer_base = row.wer_pct();
      t.wer_new = other->wer_pct();
      if (t.wer_base == 0.0)
        t.werr = t.wer_new == 0.0 ? 0.0
                                  : -std::numeric_limits<double>::infinity();
      else
        t.werr = (t.wer_base - t.wer_new) / t.wer_base;
      out.push_back(std::move(t));
    }
  }
  return out;
}

// ---------------------------------------------------------------------
// Report formatting
// ---------------------------------------------------------------------

namespace decode_detail {

inline std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace decode_detail

/// Plain-text table, one row per condition. WER and accuracies carry two
/// decimals.
inline std::string format_eval_table(const EvalReport &r) {
  std::ostringstream os;
  os << "system: " << r.label << "  mode: " << r.mode << "  split: " << r.split
     << "\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-12s %6s %9s %8s %5s %5s %5s %10s %9s\n",
                "condition", "utts", "ref_words", "WER%", "S", "I", "D",
                "FrameAcc%", "LIDAcc%");
  os << line;
  for (const EvalRow &row : r.rows) {
    std::snprintf(line, sizeof line,
                  "%-12s %6zu %9zu %8.2f %5zu %5zu %5zu %10.2f %9.2f\n",
                  row.condition.c_str(), row.utterances, row.ref_words,
                  row.wer_pct(), row.sub, row.ins, row.del,
                  row.frame_acc_pct(), row.lid_acc_pct());
    os << line;
  }
  return os.str();
}

/// Line-delimited records, one per condition: tab-separated key/value
/// pairs carrying every raw count (the percentages are derived and
/// re-derivable), so a report round-trips through save/load exactly.
inline std::string format_eval_records(const EvalReport &r) {
  std::ostringstream os;
  for (const EvalRow &row : r.rows) {
    os << "eval\tsystem\t" << r.label << "\tmode\t" << r.mode << "\tsplit\t"
       << r.split << "\tcondition\t" << row.condition << "\tutterances\t"
       << row.utterances << "\tref_words\t" << row.ref_words << "\tsub\t"
       << row.sub << "\tins\t" << row.ins << "\tdel\t" << row.del << "\twer\t"
       << decode_detail::fixed2(row.wer_pct()) << "\tframes\t" << row.frames
       << "\tframes_correct\t" << row.frames_correct << "\tframe_acc\t"
       << decode_detail::fixed2(row.frame_acc_pct()) << "\tlid_correct\t"
       << row.lid_correct << "\tlid_acc\t"
       << decode_detail::fixed2(row.lid_acc_pct()) << "\thyp_words\t"
       << row.hyp_words << "\toov_words\t" << row.oov_words << "\n";
  }
  return os.str();
}

inline std::string format_trend_summary(const std::vector<TrendRow> &rows) {
  std::ostringstream os;
  for (const TrendRow &t : rows) {
    os << "trend\tcondition\t" << t.condition << "\tbase\t" << t.base_label
       << "\tnew\t" << t.new_label << "\twer_base\t"
       << decode_detail::fixed2(t.wer_base) << "\twer_new\t"
       << decode_detail::fixed2(t.wer_new) << "\twerr_pct\t"
       << decode_detail::fixed2(100.0 * t.werr) << "\n";
  }
  return os.str();
}

inline void save_eval_report(const std::string &path, const EvalReport &r) {
  atomic_write_text(path, format_eval_records(r));
}

/// Rebuilds a report from its record lines. The derived percentage fields
/// are ignored (they are a function of the counts); header fields must
/// agree across lines.
inline EvalReport load_eval_report(const std::string &path) {
  std::istringstream in(read_text_file(path));
  EvalReport r;
  std::string line;
  std::size_t lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    while (true) {
      const std::size_t tab = line.find('\t', start);
      f.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    auto bad = [&](const std::string &why) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + why);
    };
    if (f[0] != "eval" || f.size() % 2 == 0)
      bad("expected eval<TAB>key<TAB>value pairs");
    std::map<std::string, std::string> kv;
    for (std::size_t i = 1; i + 1 < f.size(); i += 2) kv[f[i]] = f[i + 1];
    auto need = [&](const std::string &key) {
      auto it = kv.find(key);
      if (it == kv.end()) bad("missing key '" + key + "'");
      return it->second;
    };
    auto count = [&](const std::string &key) -> std::size_t {
      try {
        return std::stoull(need(key));
      } catch (const DataError &) {
        throw;
      } catch (const std::exception &) {
        throw DataError(path + ":" + std::to_string(lineno) +
                        ": bad count for '" + key + "'");
      }
    };
    if (first) {
      r.label = need("system");
      r.mode = need("mode");
      r.split = need("split");
      first = false;
    } else if (r.label != need("system") || r.mode != need("mode") ||
               r.split != need("split")) {
      bad("rows describe different systems");
    }
    EvalRow row;
    row.condition = need("condition");
    row.utterances = count("utterances");
    row.ref_words = count("ref_words");
    row.sub = count("sub");
    row.ins = count("ins");
    row.del = count("del");
    row.frames = count("frames");
    row.frames_correct = count("frames_correct");
    row.lid_correct = count("lid_correct");
    row.hyp_words = count("hyp_words");
    row.oov_words = count("oov_words");
    r.rows.push_back(std::move(row));
  }
  BLXAM_DATA_CHECK(!r.rows.empty(), "'" << path << "' holds no eval records");
  return r;
}

}  // namespace blxam

#endif  // BLXAM_DECODE_HPP_
