// blxam/synthdata.hpp

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

#ifndef BLXAM_SYNTHDATA_HPP_
#define BLXAM_SYNTHDATA_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "blxam/error.hpp"
#include "blxam/fileio.hpp"
#include "blxam/hash.hpp"
#include "blxam/lexicon.hpp"
#include "blxam/rng.hpp"
#include "blxam/tensor.hpp"
#include "blxam/wire.hpp"

// Deterministic synthetic bilingual corpora. Each grapheme unit gets a
// Gaussian acoustic prototype per locale (shared spellings get two accents,
// silence is one prototype common to both), utterances are words rendered
// unit by unit with silence around them, and code-mixed material is made
// by joining single-locale utterances with a short silence gap. Everything
// is a pure function of (spec, seed), so corpora are byte-reproducible and
// utterances may be generated in any order.

namespace blxam {

inline constexpr double kMinPrototypeDist = 0.5;  // L2, between mean vectors
inline constexpr std::size_t kCodeMixGapFrames = 2;

struct UnitPrototype {
  std::vector<double> mean;
  std::vector<double> var;  // diagonal
};

struct SyntheticLocaleSpec {
  std::string locale;
  std::size_t feature_dim = 16;
  double shared_word_fraction = 0.1;
  std::vector<std::string> words;  // romanized spellings
  GraphemeLexicon lexicon;
  std::map<std::string, UnitPrototype> prototypes;  // rendered unit -> proto
  std::size_t min_frames_per_unit = 2, max_frames_per_unit = 5;
  std::size_t min_sil_frames = 1, max_sil_frames = 3;
};

/// Stable fingerprint of a locale spec, recorded in corpus manifests.
inline std::uint64_t spec_checksum(const SyntheticLocaleSpec &s) {
  std::vector<unsigned char> b;
  wire::put_str(b, s.locale);
  wire::put_u64(b, s.feature_dim);
  wire::put_f64(b, s.shared_word_fraction);
  wire::put_u64(b, s.min_frames_per_unit);
  wire::put_u64(b, s.max_frames_per_unit);
  wire::put_u64(b, s.min_sil_frames);
  wire::put_u64(b, s.max_sil_frames);
  for (const std::string &w : s.words) wire::put_str(b, w);
  for (const auto &[unit, proto] : s.prototypes) {
    wire::put_str(b, unit);
    for (double x : proto.mean) wire::put_f64(b, x);
    for (double x : proto.var) wire::put_f64(b, x);
  }
  return fnv1a64(b.data(), b.size());
}

namespace synth_detail {

// No letter repeats immediately, so every grapheme run in a synthesized
// alignment maps to exactly one unit and a frame-synchronous collapse of
// the true path recovers the spelling.
inline std::string random_word(Rng &rng, char lo, char hi) {
  const std::size_t len = static_cast<std::size_t>(rng.uniform_int(2, 5));
  std::string w;
  while (w.size() < len) {
    const char c = static_cast<char>(rng.uniform_int(lo, hi));
    if (!w.empty() && w.back() == c) continue;
    w.push_back(c);
  }
  return w;
}

inline std::vector<std::string> fresh_words(Rng &rng, std::size_t n, char lo,
                                            char hi,
                                            std::set<std::string> &used) {
  std::vector<std::string> out;
  while (out.size() < n) {
    std::string w = random_word(rng, lo, hi);
    if (used.insert(w).second) out.push_back(w);
  }
  return out;
}

/// Draw one prototype mean at least kMinPrototypeDist from all others.
inline std::vector<double> separated_mean(
    Rng &rng, std::size_t dim, const std::vector<std::vector<double>> &taken) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<double> m(dim);
    for (double &x : m) x = rng.uniform(-1.0, 1.0);
    bool ok = true;
    for (const auto &other : taken) {
      double d2 = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        double d = m[i] - other[i];
        d2 += d * d;
      }
      if (d2 < kMinPrototypeDist * kMinPrototypeDist) {
        ok = false;
        break;
      }
    }
    if (ok) return m;
  }
  throw ConfigError(
      "cannot place " + std::to_string(taken.size() + 1) +
      " acoustic prototypes at least " + std::to_string(kMinPrototypeDist) +
      " apart in " + std::to_string(dim) +
      " dimensions; increase feature_dim");
}

}  // namespace synth_detail

/// Two locale specs from one seed: locale-a words use letters a-m, locale-b
/// words n-z, and floor(n_words * shared_fraction) words over the full
/// alphabet are spelled identically in both locales (with locale-specific
/// prototypes — accents). Prototype means are drawn once per (unit, locale)
/// with a minimum separation; silence is drawn once and shared.
inline std::pair<SyntheticLocaleSpec, SyntheticLocaleSpec> gen_locale_specs(
    std::uint64_t seed, std::size_t n_words, double shared_fraction,
    const std::string &locale_a = "it", const std::string &locale_b = "en",
    std::size_t feature_dim = 16, double noise_var = 0.05) {
  BLXAM_CONFIG_CHECK(n_words >= 5, "n_words must be >= 5, got " << n_words);
  BLXAM_CONFIG_CHECK(shared_fraction >= 0.0 && shared_fraction <= 0.5,
                     "shared_fraction must be in [0, 0.5], got "
                         << shared_fraction);
  BLXAM_CONFIG_CHECK(feature_dim >= 1, "feature_dim must be >= 1");
  BLXAM_CONFIG_CHECK(noise_var > 0.0, "noise_var must be > 0");
  BLXAM_CONFIG_CHECK(locale_a != locale_b, "locales must differ");

  Rng rng(seed);
  const std::size_t n_shared =
      static_cast<std::size_t>(static_cast<double>(n_words) * shared_fraction);
  std::set<std::string> used;
  const std::vector<std::string> shared =
      synth_detail::fresh_words(rng, n_shared, 'a', 'z', used);
  const std::vector<std::string> only_a =
      synth_detail::fresh_words(rng, n_words - n_shared, 'a', 'm', used);
  const std::vector<std::string> only_b =
      synth_detail::fresh_words(rng, n_words - n_shared, 'n', 'z', used);

  SyntheticLocaleSpec a, b;
  a.locale = locale_a;
  b.locale = locale_b;
  a.feature_dim = b.feature_dim = feature_dim;
  a.shared_word_fraction = b.shared_word_fraction = shared_fraction;
  a.words = shared;
  a.words.insert(a.words.end(), only_a.begin(), only_a.end());
  b.words = shared;
  b.words.insert(b.words.end(), only_b.begin(), only_b.end());
  a.lexicon = build_lexicon(a.words, locale_a);
  b.lexicon = build_lexicon(b.words, locale_b);

  std::vector<std::vector<double>> taken;
  const std::vector<double> noise(feature_dim, noise_var);
  UnitPrototype sil;
  sil.mean = synth_detail::separated_mean(rng, feature_dim, taken);
  sil.var = noise;
  taken.push_back(sil.mean);
  a.prototypes[kSilUnit] = sil;
  b.prototypes[kSilUnit] = sil;
  for (SyntheticLocaleSpec *spec : {&a, &b}) {
    for (const std::string &unit : spec->lexicon.unit_set()) {
      UnitPrototype p;
      p.mean = synth_detail::separated_mean(rng, feature_dim, taken);
      p.var = noise;
      taken.push_back(p.mean);
      spec->prototypes[unit] = p;
    }
  }
  return {std::move(a), std::move(b)};
}

struct Utterance {
  std::string id;
  std::uint64_t seed = 0;
  Tensor features;             // [frames x feature_dim]
  std::vector<int> alignment;  // bilingual unit id per frame
  std::vector<std::pair<std::string, std::string>> words;  // (word, locale)
  std::vector<std::pair<std::size_t, std::size_t>> boundaries;  // [begin,end)

  std::size_t frames() const { return features.rows(); }

  /// Alignment covers every frame; word spans are ascending, disjoint, and
  /// partition exactly the non-silence frames.
  void validate() const {
    BLXAM_CHECK(features.rank() == 2, "utterance '" << id
                                                    << "': features must be "
                                                       "rank 2");
    BLXAM_CHECK(alignment.size() == frames(),
                "utterance '" << id << "': " << alignment.size()
                              << " alignment ids for " << frames()
                              << " frames");
    BLXAM_CHECK(boundaries.size() == words.size(),
                "utterance '" << id << "': " << boundaries.size()
                              << " spans for " << words.size() << " words");
    std::size_t prev_end = 0;
    std::vector<bool> in_word(frames(), false);
    for (std::size_t w = 0; w < boundaries.size(); ++w) {
      const auto [begin, end] = boundaries[w];
      BLXAM_CHECK(begin < end && end <= frames() && begin >= prev_end,
                  "utterance '" << id << "': bad span [" << begin << ","
                                << end << ") for word " << w);
      for (std::size_t t = begin; t < end; ++t) in_word[t] = true;
      prev_end = end;
    }
    for (std::size_t t = 0; t < frames(); ++t) {
      BLXAM_CHECK(in_word[t] == (alignment[t] != 0),
                  "utterance '" << id << "': frame " << t
                                << " violates the word-span/silence split");
    }
  }
};

namespace synth_detail {

inline void emit_frames(Rng &rng, const UnitPrototype &proto, int unit_id,
                        std::size_t k, Utterance &u,
                        std::vector<double> &feats) {
  const std::size_t dim = proto.mean.size();
  for (std::size_t f = 0; f < k; ++f) {
    for (std::size_t i = 0; i < dim; ++i)
      feats.push_back(proto.mean[i] + rng.normal() * std::sqrt(proto.var[i]));
    u.alignment.push_back(unit_id);
  }
}

}  // namespace synth_detail

/// Render words into frames: leading/trailing and inter-word silence of
/// min_sil..max_sil frames, each unit emitting min_frames..max_frames
/// samples of its Gaussian prototype. Alignment ids live in the bilingual
/// inventory.
inline Utterance synth_utterance(const SyntheticLocaleSpec &spec,
                                 const std::vector<std::string> &words,
                                 std::uint64_t seed,
                                 const UnitInventory &bilingual,
                                 const std::string &id = "") {
  Utterance u;
  u.id = id.empty() ? "utt_" + std::to_string(seed) : id;
  u.seed = seed;
  Rng rng(seed);
  std::vector<double> feats;

  const UnitPrototype &sil = [&]() -> const UnitPrototype & {
    auto it = spec.prototypes.find(kSilUnit);
    BLXAM_CHECK(it != spec.prototypes.end(),
                "locale '" << spec.locale << "' has no silence prototype");
    return it->second;
  }();
  auto emit_sil = [&]() {
    const std::size_t k = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(spec.min_sil_frames),
                        static_cast<std::int64_t>(spec.max_sil_frames)));
    synth_detail::emit_frames(rng, sil, 0, k, u, feats);
  };

  emit_sil();
  for (const std::string &word : words) {
    const std::string key = romanize(word);
    auto entry = spec.lexicon.entries.find(key);
    BLXAM_DATA_CHECK(entry != spec.lexicon.entries.end(),
                     "unknown word '" << word << "' for locale '"
                                      << spec.locale << "'");
    const std::size_t begin = u.alignment.size();
    for (const UnitToken &tok : entry->second) {
      const std::string unit = tok.rendered();
      auto proto = spec.prototypes.find(unit);
      BLXAM_CHECK(proto != spec.prototypes.end(),
                  "locale '" << spec.locale << "' has no prototype for unit '"
                             << unit << "'");
      BLXAM_CHECK(bilingual.has(unit),
                  "unit '" << unit << "' is not in the bilingual inventory");
      const std::size_t k = static_cast<std::size_t>(rng.uniform_int(
          static_cast<std::int64_t>(spec.min_frames_per_unit),
          static_cast<std::int64_t>(spec.max_frames_per_unit)));
      synth_detail::emit_frames(rng, proto->second, bilingual.id(unit), k, u,
                                feats);
    }
    u.words.emplace_back(key, spec.locale);
    u.boundaries.emplace_back(begin, u.alignment.size());
    emit_sil();
  }
  if (words.empty()) emit_sil();  // trailing silence; loop adds it otherwise

  u.features = Tensor({u.alignment.size(), spec.feature_dim}, feats);
  u.validate();
  return u;
}

/// Join two single-locale utterances with a fixed silence gap. The gap is
/// sampled from the supplied silence model (silence is common to both
/// locales), so the result needs no further spec access.
inline Utterance make_code_mixed(const Utterance &a, const Utterance &b,
                                 const std::vector<double> &sil_mean,
                                 const std::vector<double> &sil_var,
                                 std::uint64_t seed,
                                 const std::string &id = "") {
  BLXAM_DATA_CHECK(!a.words.empty() && !b.words.empty(),
                   "code-mixing needs utterances with words");
  auto sole_locale = [](const Utterance &u) {
    const std::string &loc = u.words.front().second;
    for (const auto &[word, tag] : u.words)
      BLXAM_DATA_CHECK(tag == loc, "utterance '" << u.id
                                                 << "' is already mixed");
    return loc;
  };
  const std::string la = sole_locale(a), lb = sole_locale(b);
  BLXAM_DATA_CHECK(la != lb, "cannot code-mix two '" << la
                                                     << "' utterances");
  const std::size_t dim = a.features.cols();
  BLXAM_DATA_CHECK(b.features.cols() == dim && sil_mean.size() == dim &&
                       sil_var.size() == dim,
                   "feature widths disagree while joining '"
                       << a.id << "' and '" << b.id << "'");

  Utterance u;
  u.id = id.empty() ? a.id + "+" + b.id : id;
  u.seed = seed;
  const std::size_t ta = a.frames(), tb = b.frames();
  u.features = Tensor({ta + kCodeMixGapFrames + tb, dim});
  std::copy(a.features.v.begin(), a.features.v.end(), u.features.v.begin());
  Rng rng(seed);
  for (std::size_t f = 0; f < kCodeMixGapFrames; ++f)
    for (std::size_t i = 0; i < dim; ++i)
      u.features.at(ta + f, i) = sil_mean[i] + rng.normal() *
                                                   std::sqrt(sil_var[i]);
  std::copy(b.features.v.begin(), b.features.v.end(),
            u.features.v.begin() + (ta + kCodeMixGapFrames) * dim);

  u.alignment = a.alignment;
  u.alignment.insert(u.alignment.end(), kCodeMixGapFrames, 0);
  u.alignment.insert(u.alignment.end(), b.alignment.begin(),
                     b.alignment.end());
  u.words = a.words;
  u.words.insert(u.words.end(), b.words.begin(), b.words.end());
  u.boundaries = a.boundaries;
  for (const auto &[begin, end] : b.boundaries)
    u.boundaries.emplace_back(begin + ta + kCodeMixGapFrames,
                              end + ta + kCodeMixGapFrames);
  u.validate();
  return u;
}

/// Per-frame LID classes: 0 = locale_a word, 1 = locale_b word, 2 = SIL.
inline std::vector<int> lid_target_stream(const Utterance &u,
                                          const std::string &locale_a,
                                          const std::string &locale_b) {
  std::vector<int> t(u.frames(), 2);
  for (std::size_t w = 0; w < u.words.size(); ++w) {
    const std::string &tag = u.words[w].second;
    int cls;
    if (tag == locale_a)
      cls = 0;
    else if (tag == locale_b)
      cls = 1;
    else
      throw DataError("utterance '" + u.id + "': locale tag '" + tag +
                      "' is neither '" + locale_a + "' nor '" + locale_b +
                      "'");
    for (std::size_t f = u.boundaries[w].first; f < u.boundaries[w].second;
         ++f)
      t[f] = cls;
  }
  return t;
}

/// Nearest-prototype frame labels: every (unit, locale) prototype competes
/// by L2 distance, and the winner's bilingual id is emitted. An analytic
/// stand-in for a perfect acoustic model.
inline std::vector<int> oracle_alignment(const Tensor &features,
                                         const SyntheticLocaleSpec &a,
                                         const SyntheticLocaleSpec &b,
                                         const UnitInventory &bilingual) {
  struct Cand {
    const double *mean;
    int id;
  };
  std::vector<Cand> cands;
  for (const SyntheticLocaleSpec *spec : {&a, &b}) {
    for (const auto &[unit, proto] : spec->prototypes) {
      BLXAM_CHECK(proto.mean.size() == features.cols(),
                  "prototype width " << proto.mean.size()
                                     << " does not match features "
                                     << features.shape_str());
      const int id = unit == kSilUnit ? 0 : bilingual.id(unit);
      cands.push_back({proto.mean.data(), id});
    }
  }
  std::vector<int> out(features.rows());
  for (std::size_t t = 0; t < features.rows(); ++t) {
    const double *x = features.row(t);
    double best = 0.0;
    int best_id = 0;
    bool first = true;
    for (const Cand &c : cands) {
      double d2 = 0.0;
      for (std::size_t i = 0; i < features.cols(); ++i) {
        double d = x[i] - c.mean[i];
        d2 += d * d;
      }
      if (first || d2 < best) {
        best = d2;
        best_id = c.id;
        first = false;
      }
    }
    out[t] = best_id;
  }
  return out;
}

// ---------------------------------------------------------------------
// Utterance files
// ---------------------------------------------------------------------

namespace synth_detail {
inline constexpr char kUttMagic[6] = {'B', 'L', 'X', 'U', 'T', '1'};
}

/// Binary utterance file: magic, id, seed, frame/feature counts, features
/// as little-endian doubles, alignment ids, tagged words with spans, and a
/// trailing FNV-1a checksum. Validated before writing.
inline void save_utterance(const std::string &path, const Utterance &u) {
  u.validate();
  std::vector<unsigned char> b;
  wire::put_str(b, u.id);
  wire::put_u64(b, u.seed);
  wire::put_u64(b, u.frames());
  wire::put_u64(b, u.features.cols());
  for (double x : u.features.v) wire::put_f64(b, x);
  for (int a : u.alignment) wire::put_i32(b, a);
  wire::put_u32(b, static_cast<std::uint32_t>(u.words.size()));
  for (std::size_t w = 0; w < u.words.size(); ++w) {
    wire::put_str(b, u.words[w].first);
    wire::put_str(b, u.words[w].second);
    wire::put_u64(b, u.boundaries[w].first);
    wire::put_u64(b, u.boundaries[w].second);
  }
  std::vector<unsigned char> out;
  out.reserve(sizeof(synth_detail::kUttMagic) + b.size() + 8);
  out.insert(out.end(), synth_detail::kUttMagic,
             synth_detail::kUttMagic + sizeof(synth_detail::kUttMagic));
  out.insert(out.end(), b.begin(), b.end());
  wire::put_u64(out, fnv1a64(b.data(), b.size()));
  atomic_write_file(path, out.data(), out.size());
}

inline Utterance load_utterance(const std::string &path) {
  std::ifstream f(path, std::ios::binary);
  BLXAM_DATA_CHECK(f.good(), "cannot open utterance '" << path << "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
  const std::size_t magic_len = sizeof(synth_detail::kUttMagic);
  BLXAM_DATA_CHECK(bytes.size() >= magic_len + 8,
                   "'" << path << "' too small to be an utterance file");
  BLXAM_DATA_CHECK(std::equal(synth_detail::kUttMagic,
                              synth_detail::kUttMagic + magic_len,
                              bytes.begin()),
                   "'" << path << "' is not an utterance file (bad magic)");
  const std::size_t payload_len = bytes.size() - magic_len - 8;
  const unsigned char *payload = bytes.data() + magic_len;
  std::uint64_t want = 0;
  {
    wire::Cursor tail{payload + payload_len, 8, path, "utterance"};
    want = tail.u64();
  }
  BLXAM_DATA_CHECK(fnv1a64(payload, payload_len) == want,
                   "checksum mismatch in '" << path
                                            << "': file is corrupt or was "
                                            << "truncated");
  wire::Cursor c{payload, payload_len, path, "utterance"};
  Utterance u;
  u.id = c.str(c.u32());
  u.seed = c.u64();
  const std::size_t frames = static_cast<std::size_t>(c.u64());
  const std::size_t dim = static_cast<std::size_t>(c.u64());
  u.features = Tensor({frames, dim});
  for (double &x : u.features.v) x = c.f64();
  u.alignment.resize(frames);
  for (int &a : u.alignment) a = c.i32();
  const std::uint32_t n_words = c.u32();
  for (std::uint32_t w = 0; w < n_words; ++w) {
    std::string word = c.str(c.u32());
    std::string locale = c.str(c.u32());
    const std::size_t begin = static_cast<std::size_t>(c.u64());
    const std::size_t end = static_cast<std::size_t>(c.u64());
    u.words.emplace_back(std::move(word), std::move(locale));
    u.boundaries.emplace_back(begin, end);
  }
  BLXAM_DATA_CHECK(c.left == 0, "'" << path << "' has " << c.left
                                    << " trailing bytes");
  try {
    u.validate();
  } catch (const Error &e) {
    throw DataError("'" + path + "': " + e.what());
  }
  return u;
}

// ---------------------------------------------------------------------
// Corpus building
// ---------------------------------------------------------------------

struct SplitSizes {
  std::size_t train = 0, dev = 0, test = 0;

  std::size_t of(const std::string &split) const {
    if (split == "train") return train;
    if (split == "dev") return dev;
    if (split == "test") return test;
    throw ConfigError("unknown split '" + split + "'");
  }
};

struct CorpusSizes {
  SplitSizes mono_a, mono_b, code_mixed;
  std::size_t min_words_per_utt = 2, max_words_per_utt = 5;
};

struct ManifestEntry {
  std::string path;  // relative to the manifest file
  std::string split;
  std::string condition;  // mono-a | mono-b | code-mixed
};

struct CorpusManifest {
  std::uint64_t seed = 0;
  std::string locale_a, locale_b;
  std::uint64_t spec_hash_a = 0, spec_hash_b = 0;
  std::uint64_t space_hash = 0;  // bilingual UnitInventory::checksum()
  std::vector<ManifestEntry> entries;

  std::vector<ManifestEntry> select(const std::string &split,
                                    const std::string &condition) const {
    std::vector<ManifestEntry> out;
    for (const ManifestEntry &e : entries)
      if (e.split == split && e.condition == condition) out.push_back(e);
    return out;
  }

  /// Utterance ids (file stems) must be unique across all splits.
  void validate() const {
    std::set<std::string> ids;
    for (const ManifestEntry &e : entries) {
      BLXAM_DATA_CHECK(ids.insert(e.path).second,
                       "utterance '" << e.path
                                     << "' appears more than once in the "
                                     << "manifest");
      BLXAM_DATA_CHECK(e.split == "train" || e.split == "dev" ||
                           e.split == "test",
                       "unknown split '" << e.split << "'");
      BLXAM_DATA_CHECK(e.condition == "mono-a" || e.condition == "mono-b" ||
                           e.condition == "code-mixed",
                       "unknown condition '" << e.condition << "'");
    }
  }
};

inline void save_manifest(const std::string &path, const CorpusManifest &m) {
  m.validate();
  std::ostringstream os;
  os << "blxam-corpus\tv1\n";
  os << "seed\t" << m.seed << '\n';
  os << "locale_a\t" << m.locale_a << '\n';
  os << "locale_b\t" << m.locale_b << '\n';
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(m.spec_hash_a));
  os << "spec_hash_a\t" << hex << '\n';
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(m.spec_hash_b));
  os << "spec_hash_b\t" << hex << '\n';
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(m.space_hash));
  os << "space_hash\t" << hex << '\n';
  for (const ManifestEntry &e : m.entries)
    os << "utt\t" << e.path << '\t' << e.split << '\t' << e.condition << '\n';
  atomic_write_text(path, os.str());
}

inline CorpusManifest load_manifest(const std::string &path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  BLXAM_DATA_CHECK(std::getline(in, line) && line == "blxam-corpus\tv1",
                   "'" << path << "' is not a corpus manifest");
  CorpusManifest m;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    while (true) {
      std::size_t tab = line.find('\t', start);
      f.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    auto bad = [&](const std::string &why) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + why);
    };
    if (f[0] == "utt") {
      if (f.size() != 4) bad("expected utt<TAB>path<TAB>split<TAB>condition");
      m.entries.push_back({f[1], f[2], f[3]});
    } else if (f.size() == 2) {
      try {
        if (f[0] == "seed")
          m.seed = std::stoull(f[1]);
        else if (f[0] == "locale_a")
          m.locale_a = f[1];
        else if (f[0] == "locale_b")
          m.locale_b = f[1];
        else if (f[0] == "spec_hash_a")
          m.spec_hash_a = std::stoull(f[1], nullptr, 16);
        else if (f[0] == "spec_hash_b")
          m.spec_hash_b = std::stoull(f[1], nullptr, 16);
        else if (f[0] == "space_hash")
          m.space_hash = std::stoull(f[1], nullptr, 16);
        else
          bad("unknown key '" + f[0] + "'");
      } catch (const DataError &) {
        throw;
      } catch (const std::exception &) {
        bad("bad value for '" + f[0] + "'");
      }
    } else {
      bad("malformed line '" + line + "'");
    }
  }
  m.validate();
  return m;
}

/// Generate a corpus into out_dir: one .utt file per utterance plus
/// corpus.manifest. Pure function of (specs, sizes, seed); every utterance
/// derives its own seed from the corpus seed and its id, so files are
/// byte-identical across runs. Code-mixed utterances join sources from the
/// same split only.
inline CorpusManifest build_corpus(const SyntheticLocaleSpec &spec_a,
                                   const SyntheticLocaleSpec &spec_b,
                                   const UnitInventory &bilingual,
                                   const CorpusSizes &sizes,
                                   std::uint64_t seed,
                                   const std::string &out_dir) {
  BLXAM_CONFIG_CHECK(sizes.min_words_per_utt >= 1 &&
                         sizes.max_words_per_utt >= sizes.min_words_per_utt,
                     "bad words-per-utterance range ["
                         << sizes.min_words_per_utt << ","
                         << sizes.max_words_per_utt << "]");
  std::filesystem::create_directories(out_dir);

  CorpusManifest m;
  m.seed = seed;
  m.locale_a = spec_a.locale;
  m.locale_b = spec_b.locale;
  m.spec_hash_a = spec_checksum(spec_a);
  m.spec_hash_b = spec_checksum(spec_b);
  m.space_hash = bilingual.checksum();

  auto utt_seed = [&](const std::string &id) {
    return mix_seed(seed, fnv1a64(id.data(), id.size()));
  };
  auto gen_mono = [&](const SyntheticLocaleSpec &spec,
                      const std::string &split, const std::string &cond,
                      std::size_t count) {
    std::vector<Utterance> made;
    BLXAM_DATA_CHECK(count == 0 || spec.words.size() >= 2,
                     "insufficient word variety in locale '"
                         << spec.locale << "' for " << count
                         << " utterances");
    for (std::size_t i = 0; i < count; ++i) {
      char num[24];
      std::snprintf(num, sizeof(num), "%04zu", i);
      const std::string id = split + "_" + cond + "_" + num;
      Rng pick(mix_seed(utt_seed(id), 1));
      const std::size_t n_words = static_cast<std::size_t>(pick.uniform_int(
          static_cast<std::int64_t>(sizes.min_words_per_utt),
          static_cast<std::int64_t>(sizes.max_words_per_utt)));
      std::vector<std::string> words;
      for (std::size_t w = 0; w < n_words; ++w)
        words.push_back(spec.words[static_cast<std::size_t>(pick.uniform_int(
            0, static_cast<std::int64_t>(spec.words.size()) - 1))]);
      Utterance u = synth_utterance(spec, words, mix_seed(utt_seed(id), 2),
                                    bilingual, id);
      save_utterance(out_dir + "/" + id + ".utt", u);
      m.entries.push_back({id + ".utt", split, cond});
      made.push_back(std::move(u));
    }
    return made;
  };

  auto sil_it = spec_a.prototypes.find(kSilUnit);
  BLXAM_CHECK(sil_it != spec_a.prototypes.end(),
              "locale '" << spec_a.locale << "' has no silence prototype");
  const UnitPrototype &sil = sil_it->second;
  for (const std::string &split : {"train", "dev", "test"}) {
    std::vector<Utterance> mono_a =
        gen_mono(spec_a, split, "mono-a", sizes.mono_a.of(split));
    std::vector<Utterance> mono_b =
        gen_mono(spec_b, split, "mono-b", sizes.mono_b.of(split));
    const std::size_t n_cm = sizes.code_mixed.of(split);
    BLXAM_DATA_CHECK(n_cm == 0 || (!mono_a.empty() && !mono_b.empty()),
                     "code-mixed " << split << " utterances need mono-a and "
                                   << "mono-b sources in the same split");
    for (std::size_t i = 0; i < n_cm; ++i) {
      char num[24];
      std::snprintf(num, sizeof(num), "%04zu", i);
      const std::string id = std::string(split) + "_code-mixed_" + num;
      Rng pick(mix_seed(utt_seed(id), 1));
      const Utterance &ua = mono_a[static_cast<std::size_t>(pick.uniform_int(
          0, static_cast<std::int64_t>(mono_a.size()) - 1))];
      const Utterance &ub = mono_b[static_cast<std::size_t>(pick.uniform_int(
          0, static_cast<std::int64_t>(mono_b.size()) - 1))];
      const bool a_first = pick.uniform() < 0.5;
      Utterance u = make_code_mixed(a_first ? ua : ub, a_first ? ub : ua,
                                    sil.mean, sil.var,
                                    mix_seed(utt_seed(id), 2), id);
      save_utterance(out_dir + "/" + id + ".utt", u);
      m.entries.push_back({id + ".utt", split, "code-mixed"});
    }
  }
  save_manifest(out_dir + "/corpus.manifest", m);
  return m;
}

}  // namespace blxam

#endif  // BLXAM_SYNTHDATA_HPP_
