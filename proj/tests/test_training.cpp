// tests/test_training.cpp

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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <string>
#include <unistd.h>
#include <utility>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "blxam/training.hpp"

using namespace blxam;

namespace {

struct Setup {
  SyntheticLocaleSpec spec_a, spec_b;
  BilingualSpaceMap space;
};

Setup make_setup(std::uint64_t seed, std::size_t n_words = 10,
                 double shared = 0.2, std::size_t dim = 8) {
  Setup s;
  auto specs = gen_locale_specs(seed, n_words, shared, "it", "en", dim, 0.05);
  s.spec_a = std::move(specs.first);
  s.spec_b = std::move(specs.second);
  s.space = merge_inventories(s.spec_a.lexicon, s.spec_b.lexicon);
  return s;
}

ModelConfig tiny_cfg(std::size_t feature_dim) {
  ModelConfig c;
  c.feature_dim = feature_dim;
  c.model_dim = 16;
  c.heads = 2;
  c.ff_dim = 32;
  c.n_shared_layers = 2;
  c.n_pe_layers = 1;
  c.n_lid_layers = 1;
  c.chunk_frames = 8;
  c.locale_a = "it";
  c.locale_b = "en";
  return c;
}

std::vector<Utterance> mono_utts(const SyntheticLocaleSpec &spec,
                                 const UnitInventory &bilingual,
                                 std::size_t count, std::uint64_t seed) {
  std::vector<Utterance> out;
  Rng rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t n = static_cast<std::size_t>(rng.uniform_int(2, 3));
    std::vector<std::string> words;
    for (std::size_t j = 0; j < n; ++j)
      words.push_back(spec.words[static_cast<std::size_t>(rng.uniform_int(
          0, static_cast<std::int64_t>(spec.words.size()) - 1))]);
    out.push_back(synth_utterance(spec, words, rng.raw(), bilingual,
                                  spec.locale + "_" + std::to_string(i)));
  }
  return out;
}

// FNV over value, Adam state and step count of every parameter under a
// name prefix. Detects any optimizer activity, not just value changes.
std::uint64_t prefix_sig(const ParameterStore &store,
                         const std::string &prefix) {
  std::uint64_t h = kFnvOffsetBasis;
  for (const auto &[name, p] : store.params()) {
    if (name.compare(0, prefix.size(), prefix) != 0) continue;
    h = fnv1a64(name.data(), name.size(), h);
    h = fnv1a64(p.value.v.data(), p.value.v.size() * sizeof(double), h);
    h = fnv1a64(p.m.v.data(), p.m.v.size() * sizeof(double), h);
    h = fnv1a64(p.v.v.data(), p.v.v.size() * sizeof(double), h);
    const std::uint64_t step = p.step;
    h = fnv1a64(&step, sizeof step, h);
  }
  return h;
}

double grad_norm_under(ParameterStore &store, const std::string &prefix) {
  double n = 0.0;
  for (auto &[name, p] : store.params()) {
    if (name.compare(0, prefix.size(), prefix) != 0) continue;
    for (double g : p.grad.v) n += g * g;
  }
  return std::sqrt(n);
}

// Copies the locale-a side onto the locale-b side so both parallel
// encoders and per-locale heads start bit-identical.
void mirror_ab(AcousticModel &model) {
  for (auto &[name, p] : model.store.params()) {
    std::string other;
    if (name.compare(0, 5, "pe_a.") == 0)
      other = "pe_b." + name.substr(5);
    else if (name.compare(0, 7, "head_a.") == 0)
      other = "head_b." + name.substr(7);
    else
      continue;
    model.store.get(other).value = p.value;
  }
}

bool records_equal_ignoring_wall(const EpochRecord &a, const EpochRecord &b) {
  return a.epoch == b.epoch && a.components == b.components &&
         a.weights == b.weights && a.total == b.total &&
         a.accuracy == b.accuracy && a.frames == b.frames &&
         a.param_checksum == b.param_checksum;
}

std::string strip_wall(const std::string &line) {
  const std::size_t pos = line.rfind("\twall_ms\t");
  return pos == std::string::npos ? line : line.substr(0, pos);
}

std::filesystem::path fresh_dir(const std::string &tag) {
  auto dir = std::filesystem::temp_directory_path() /
             ("blxam_train_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("frame targets follow the locale tagging rules", "[training]") {
  Setup s = make_setup(11);

  SECTION("all-silence utterance is SIL in every stream") {
    Utterance u = synth_utterance(s.spec_a, {}, 5, s.space.bilingual);
    FrameTargets t = make_frame_targets(u, s.space);
    REQUIRE(t.bilingual.size() == u.frames());
    for (std::size_t f = 0; f < u.frames(); ++f) {
      REQUIRE(t.bilingual[f] == kSilId);
      REQUIRE(t.mono_a[f] == kSilId);
      REQUIRE(t.mono_b[f] == kSilId);
      REQUIRE(t.lid[f] == kLidSil);
    }
  }

  SECTION("locale-a word: FOREIGN in the b stream, own unit in the a stream") {
    Utterance u =
        synth_utterance(s.spec_a, {s.spec_a.words[0]}, 7, s.space.bilingual);
    FrameTargets t = make_frame_targets(u, s.space);
    std::size_t speech = 0;
    for (std::size_t f = 0; f < u.frames(); ++f) {
      if (u.alignment[f] == kSilId) {
        REQUIRE(t.mono_a[f] == kSilId);
        REQUIRE(t.mono_b[f] == kSilId);
        REQUIRE(t.lid[f] == kLidSil);
        continue;
      }
      ++speech;
      REQUIRE(t.lid[f] == 0);
      REQUIRE(t.mono_b[f] == kForeignId);
      REQUIRE(t.mono_a[f] ==
              s.space.map_a[static_cast<std::size_t>(u.alignment[f])]);
      REQUIRE(t.mono_a[f] != kForeignId);
      REQUIRE(t.mono_a[f] != kSilId);
      // Same rendered unit in both numbering spaces.
      REQUIRE(s.space.space_a.units[static_cast<std::size_t>(t.mono_a[f])] ==
              s.space.bilingual.units[static_cast<std::size_t>(
                  u.alignment[f])]);
    }
    REQUIRE(speech > 0);
  }

  SECTION("shared spelling tagged locale-a is still FOREIGN to locale-b") {
    std::string shared_word;
    for (const std::string &w : s.spec_a.words)
      if (s.spec_b.lexicon.entries.count(romanize(w))) shared_word = w;
    REQUIRE(!shared_word.empty());
    Utterance u =
        synth_utterance(s.spec_a, {shared_word}, 9, s.space.bilingual);
    FrameTargets t = make_frame_targets(u, s.space);
    bool saw_known_to_b = false;
    for (std::size_t f = 0; f < u.frames(); ++f) {
      if (u.alignment[f] == kSilId) continue;
      if (s.space.map_b[static_cast<std::size_t>(u.alignment[f])] !=
          kForeignId)
        saw_known_to_b = true;
      REQUIRE(t.mono_b[f] == kForeignId);  // tag decides, not the inventory
    }
    REQUIRE(saw_known_to_b);
  }

  SECTION("code-mixed utterance: lid flips exactly once at the join") {
    Utterance ua = synth_utterance(
        s.spec_a, {s.spec_a.words[1], s.spec_a.words[2]}, 3, s.space.bilingual);
    Utterance ub = synth_utterance(
        s.spec_b, {s.spec_b.words[1], s.spec_b.words[2]}, 4, s.space.bilingual);
    const UnitPrototype &sil = s.spec_a.prototypes.at(kSilUnit);
    Utterance mix = make_code_mixed(ua, ub, sil.mean, sil.var, 17);
    FrameTargets t = make_frame_targets(mix, s.space);
    std::vector<int> speech_lid;
    for (std::size_t f = 0; f < mix.frames(); ++f) {
      if (t.lid[f] == kLidSil) continue;
      if (speech_lid.empty() || speech_lid.back() != t.lid[f])
        speech_lid.push_back(t.lid[f]);
      // Per-frame consistency on speech frames.
      if (t.lid[f] == 0) {
        REQUIRE(t.mono_b[f] == kForeignId);
        REQUIRE(t.mono_a[f] != kForeignId);
      } else {
        REQUIRE(t.mono_a[f] == kForeignId);
        REQUIRE(t.mono_b[f] != kForeignId);
      }
    }
    REQUIRE(speech_lid == std::vector<int>{0, 1});
  }

  SECTION("alignment length mismatch is rejected") {
    Utterance u =
        synth_utterance(s.spec_a, {s.spec_a.words[0]}, 7, s.space.bilingual);
    u.alignment.pop_back();
    CHECK_THROWS_AS(make_frame_targets(u, s.space), DataError);
    CHECK_THROWS_WITH(make_frame_targets(u, s.space),
                      Catch::Matchers::ContainsSubstring("alignment"));
  }
}

TEST_CASE("bilingual loss matches closed forms and a hand-summed oracle",
          "[training]") {
  Setup s = make_setup(23);
  const std::size_t k = s.space.bilingual.size();

  SECTION("uniform posteriors give ln K") {
    ForwardOutput out;
    out.logp_bilingual = Tensor({5, k});
    out.logp_bilingual.fill(-std::log(static_cast<double>(k)));
    FrameTargets t;
    t.bilingual = {0, 1, 2, 0, 1};
    REQUIRE(loss_bilingual(out, t) ==
            Catch::Approx(std::log(static_cast<double>(k))).margin(1e-12));
  }

  SECTION("near one-hot posteriors give near-zero loss") {
    ForwardOutput out;
    out.logp_bilingual = Tensor({3, k});
    FrameTargets t;
    t.bilingual = {2, 0, 1};
    for (std::size_t f = 0; f < 3; ++f) {
      std::vector<double> logits(k, 0.0);
      logits[static_cast<std::size_t>(t.bilingual[f])] = 30.0;
      kernels::log_softmax_row(logits.data(), k,
                               out.logp_bilingual.v.data() + f * k);
    }
    REQUIRE(loss_bilingual(out, t) < 1e-9);
  }

  SECTION("random case matches a hand-summed oracle") {
    Rng rng(5);
    const std::size_t frames = 7;
    ForwardOutput out;
    out.logp_bilingual = Tensor({frames, k});
    FrameTargets t;
    for (std::size_t f = 0; f < frames; ++f) {
      std::vector<double> logits(k);
      for (double &x : logits) x = rng.normal();
      kernels::log_softmax_row(logits.data(), k,
                               out.logp_bilingual.v.data() + f * k);
      t.bilingual.push_back(static_cast<int>(
          rng.uniform_int(0, static_cast<std::int64_t>(k) - 1)));
    }
    double oracle = 0.0;
    for (std::size_t f = 0; f < frames; ++f)
      oracle -= out.logp_bilingual.at(
          f, static_cast<std::size_t>(t.bilingual[f]));
    oracle /= static_cast<double>(frames);
    REQUIRE(loss_bilingual(out, t) == Catch::Approx(oracle).margin(1e-12));
  }

  SECTION("out-of-range target ids are rejected") {
    ForwardOutput out;
    out.logp_bilingual = Tensor({2, k});
    FrameTargets t;
    t.bilingual = {0, static_cast<int>(k)};
    REQUIRE_THROWS_AS(loss_bilingual(out, t), DataError);
    t.bilingual = {-1, 0};
    REQUIRE_THROWS_AS(loss_bilingual(out, t), DataError);
    t.bilingual = {0};
    REQUIRE_THROWS_AS(loss_bilingual(out, t), DataError);  // length mismatch
  }

  SECTION("agrees with the tape cross entropy on a real forward pass") {
    Rng rng(31);
    AcousticModel model(tiny_cfg(s.spec_a.feature_dim), s.space, rng);
    Utterance u = synth_utterance(
        s.spec_a, {s.spec_a.words[0], s.spec_a.words[1]}, 2, s.space.bilingual);
    FrameTargets t = make_frame_targets(u, s.space);
    ForwardOutput fo = model.forward_all(u.features);

    Tape tape;
    Node *sh = model.forward_shared(tape, u.features);
    Node *ha = model.forward_pe(tape, "it", sh);
    Node *hb = model.forward_pe(tape, "en", sh);
    Node *bi = model.project_bilingual(tape, ha, hb);
    Node *ce = ops::cross_entropy(tape, bi, t.bilingual);
    REQUIRE(ce->val.v[0] ==
            Catch::Approx(loss_bilingual(fo, t)).margin(1e-12));
  }
}

TEST_CASE("lid loss closed forms and the weighted-total oracle",
          "[training]") {
  SECTION("uniform probabilities give ln 3") {
    ForwardOutput out;
    out.lid_probs = Tensor({4, 3});
    out.lid_probs.fill(1.0 / 3.0);
    FrameTargets t;
    t.lid = {0, 1, 2, 1};
    REQUIRE(loss_lid(out, t) == Catch::Approx(std::log(3.0)).margin(1e-12));
    REQUIRE(loss_lid(out, t) == Catch::Approx(1.098612).margin(1e-6));
  }

  SECTION("correct one-hot probabilities give zero loss") {
    ForwardOutput out;
    out.lid_probs = Tensor({3, 3});
    FrameTargets t;
    t.lid = {2, 0, 1};
    for (std::size_t f = 0; f < 3; ++f)
      out.lid_probs.at(f, static_cast<std::size_t>(t.lid[f])) = 1.0;
    REQUIRE(loss_lid(out, t) == 0.0);
  }

  SECTION("weighted total matches the componentwise oracle") {
    Setup s = make_setup(37);
    Rng rng(41);
    AcousticModel model(tiny_cfg(s.spec_a.feature_dim), s.space, rng);
    Utterance u = synth_utterance(
        s.spec_b, {s.spec_b.words[0], s.spec_b.words[1]}, 6, s.space.bilingual);
    FrameTargets t = make_frame_targets(u, s.space);
    ForwardOutput fo = model.forward_all(u.features);
    TrainingPlan plan;
    const double total = plan.main_loss_weight * loss_bilingual(fo, t) +
                         plan.lid_loss_weight * loss_lid(fo, t);

    double ce_bi = 0.0, ce_lid = 0.0;
    for (std::size_t f = 0; f < u.frames(); ++f) {
      ce_bi -= fo.logp_bilingual.at(
          f, static_cast<std::size_t>(t.bilingual[f]));
      ce_lid -= std::log(fo.lid_probs.at(f, static_cast<std::size_t>(t.lid[f])));
    }
    const double n = static_cast<double>(u.frames());
    REQUIRE(total ==
            Catch::Approx(1.0 * ce_bi / n + 0.02 * ce_lid / n).margin(1e-12));
  }

  SECTION("bad lid targets are rejected") {
    ForwardOutput out;
    out.lid_probs = Tensor({1, 3});
    out.lid_probs.fill(1.0 / 3.0);
    FrameTargets t;
    t.lid = {3};
    REQUIRE_THROWS_AS(loss_lid(out, t), DataError);
  }
}

TEST_CASE("aux loss reduces and decomposes", "[training]") {
  Setup s = make_setup(43);
  Rng rng(47);
  AcousticModel model(tiny_cfg(s.spec_a.feature_dim), s.space, rng);
  Utterance u = synth_utterance(
      s.spec_a, {s.spec_a.words[0], s.spec_a.words[3]}, 8, s.space.bilingual);
  FrameTargets t = make_frame_targets(u, s.space);
  ForwardOutput fo = model.forward_all(u.features);

  SECTION("zero aux weights reduce to the bilingual loss exactly") {
    TrainingPlan plan;
    plan.aux_loss_weight_a = 0.0;
    plan.aux_loss_weight_b = 0.0;
    REQUIRE(loss_aux(fo, t, plan) == loss_bilingual(fo, t));
  }

  SECTION("random case matches the componentwise oracle") {
    TrainingPlan plan;
    plan.main_loss_weight = 0.8;
    plan.aux_loss_weight_a = 0.4;
    plan.aux_loss_weight_b = 0.6;
    double ce_bi = 0.0, ce_a = 0.0, ce_b = 0.0;
    for (std::size_t f = 0; f < u.frames(); ++f) {
      ce_bi -= fo.logp_bilingual.at(
          f, static_cast<std::size_t>(t.bilingual[f]));
      ce_a -= fo.logp_mono_a.at(f, static_cast<std::size_t>(t.mono_a[f]));
      ce_b -= fo.logp_mono_b.at(f, static_cast<std::size_t>(t.mono_b[f]));
    }
    const double n = static_cast<double>(u.frames());
    REQUIRE(loss_aux(fo, t, plan) ==
            Catch::Approx(0.8 * ce_bi / n + 0.4 * ce_a / n + 0.6 * ce_b / n)
                .margin(1e-12));
  }

  SECTION("symmetric init gives identical loss on a label-swapped stream") {
    // Both locales spell the same single word, so the per-locale unit
    // inventories coincide and swapping the tag mirrors the targets.
    GraphemeLexicon lex_a = build_lexicon({"di"}, "it");
    GraphemeLexicon lex_b = build_lexicon({"di"}, "en");
    BilingualSpaceMap space = merge_inventories(lex_a, lex_b);
    Rng mrng(53);
    ModelConfig cfg = tiny_cfg(6);
    AcousticModel m(cfg, space, mrng);
    mirror_ab(m);

    Rng frng(59);
    Tensor feats({4, 6});
    for (double &x : feats.v) x = frng.normal();
    const int id_d = static_cast<int>(space.bilingual.id("_d"));
    const int id_i = static_cast<int>(space.bilingual.id("i_"));
    FrameTargets ta, tb;
    ta.bilingual = tb.bilingual = {kSilId, id_d, id_i, kSilId};
    ta.lid = {kLidSil, 0, 0, kLidSil};
    tb.lid = {kLidSil, 1, 1, kLidSil};
    ta.mono_a = {kSilId, space.map_a[static_cast<std::size_t>(id_d)],
                 space.map_a[static_cast<std::size_t>(id_i)], kSilId};
    ta.mono_b = {kSilId, kForeignId, kForeignId, kSilId};
    tb.mono_a = {kSilId, kForeignId, kForeignId, kSilId};
    tb.mono_b = {kSilId, space.map_b[static_cast<std::size_t>(id_d)],
                 space.map_b[static_cast<std::size_t>(id_i)], kSilId};

    ForwardOutput fo2 = m.forward_all(feats);
    TrainingPlan plan;
    const double la = loss_aux(fo2, ta, plan);
    const double lb = loss_aux(fo2, tb, plan);
    REQUIRE(la == Catch::Approx(lb).margin(1e-12));
  }
}

TEST_CASE("training plan validation", "[training]") {
  TrainingPlan plan;
  REQUIRE_NOTHROW(plan.validate());

  SECTION("unknown stage") {
    plan.stage = "pretrain";
    REQUIRE_THROWS_AS(plan.validate(), ConfigError);
    REQUIRE_THROWS_AS(parse_stage("finetune"), ConfigError);
    REQUIRE(parse_stage("bilingual-pretrain") == Stage::kBilingualPretrain);
    REQUIRE(std::string(stage_name(Stage::kLidFinetune)) == "lid-finetune");
  }
  SECTION("negative weights") {
    plan.aux_loss_weight_a = -0.1;
    REQUIRE_THROWS_AS(plan.validate(), ConfigError);
  }
  SECTION("main weight must be positive outside pretrain") {
    plan.main_loss_weight = 0.0;
    plan.stage = "aux-joint";
    REQUIRE_THROWS_AS(plan.validate(), ConfigError);
    plan.stage = "lid-finetune";
    REQUIRE_THROWS_AS(plan.validate(), ConfigError);
    plan.stage = "bilingual-pretrain";
    REQUIRE_NOTHROW(plan.validate());
  }
  SECTION("optimizer settings") {
    plan.learning_rate = 0.0;
    REQUIRE_THROWS_AS(plan.validate(), ConfigError);
    plan.learning_rate = 1e-3;
    plan.beta1 = 1.0;
    REQUIRE_THROWS_AS(plan.validate(), ConfigError);
    plan.beta1 = 0.9;
    plan.epochs = 0;
    REQUIRE_THROWS_AS(plan.validate(), ConfigError);
    plan.epochs = 1;
    plan.batch_utterances = 0;
    REQUIRE_THROWS_AS(plan.validate(), ConfigError);
  }
  SECTION("degenerate data is rejected") {
    Setup s = make_setup(61);
    Rng rng(1);
    AcousticModel model(tiny_cfg(s.spec_a.feature_dim), s.space, rng);
    CHECK_THROWS_AS(train_stage(model, {}, plan), DataError);
    CHECK_THROWS_WITH(
        train_stage(model, {}, plan),
        Catch::Matchers::ContainsSubstring("no training utterances"));
    Utterance empty;
    empty.id = "empty";
    empty.features = Tensor({0, s.spec_a.feature_dim});
    CHECK_THROWS_AS(train_stage(model, {empty}, plan), DataError);
    CHECK_THROWS_WITH(train_stage(model, {empty}, plan),
                      Catch::Matchers::ContainsSubstring("no frames"));
  }
}

TEST_CASE("aux-joint training decreases the loss and reproduces bit-for-bit",
          "[training]") {
  Setup s = make_setup(21, 12, 0.2, 8);
  std::vector<Utterance> data = mono_utts(s.spec_a, s.space.bilingual, 25, 2);
  std::vector<Utterance> more = mono_utts(s.spec_b, s.space.bilingual, 25, 3);
  data.insert(data.end(), more.begin(), more.end());
  std::size_t total_frames = 0;
  for (const Utterance &u : data) total_frames += u.frames();

  TrainingPlan plan;
  plan.stage = "aux-joint";
  plan.epochs = 4;
  plan.batch_utterances = 8;
  plan.warmup_steps = 12;
  plan.seed = 7;

  Rng rng_a(99);
  AcousticModel model(tiny_cfg(8), s.space, rng_a);
  TrainLog log = train_stage(model, data, plan);

  REQUIRE(log.stage == "aux-joint");
  REQUIRE(log.epochs.size() == 4);
  for (std::size_t e = 0; e + 1 < log.epochs.size(); ++e)
    REQUIRE(log.epochs[e + 1].total < log.epochs[e].total);

  for (const EpochRecord &rec : log.epochs) {
    REQUIRE(rec.frames == total_frames);
    REQUIRE(rec.components.size() == 3);
    REQUIRE(rec.components[0].first == "bilingual");
    REQUIRE(rec.components[1].first == "mono_a");
    REQUIRE(rec.components[2].first == "mono_b");
    REQUIRE(rec.weights[0].second == 1.0);
    REQUIRE(rec.weights[1].second == 0.5);
    REQUIRE(rec.weights[2].second == 0.5);
    double sum = 0.0;
    for (std::size_t i = 0; i < rec.components.size(); ++i)
      sum += rec.weights[i].second * rec.components[i].second;
    REQUIRE(rec.total == sum);  // decomposition is exact
    for (const auto &[head, acc] : rec.accuracy) {
      REQUIRE(acc >= 0.0);
      REQUIRE(acc <= 1.0);
    }
  }
  REQUIRE(log.epochs.back().accuracy[0].second >=
          log.epochs.front().accuracy[0].second);
  REQUIRE(log.epochs.back().param_checksum == model.store.value_checksum());

  SECTION("same seed and data reproduce the log bit-for-bit") {
    Rng rng_b(99);
    AcousticModel model2(tiny_cfg(8), s.space, rng_b);
    TrainLog log2 = train_stage(model2, data, plan);
    REQUIRE(log2.epochs.size() == log.epochs.size());
    for (std::size_t e = 0; e < log.epochs.size(); ++e) {
      REQUIRE(records_equal_ignoring_wall(log.epochs[e], log2.epochs[e]));
      REQUIRE(strip_wall(format_epoch_record(log.epochs[e], log.stage)) ==
              strip_wall(format_epoch_record(log2.epochs[e], log2.stage)));
    }
    REQUIRE(model.store.value_checksum() == model2.store.value_checksum());
  }

  SECTION("a different shuffle seed trains a different model") {
    Rng rng_b(99);
    AcousticModel model2(tiny_cfg(8), s.space, rng_b);
    TrainingPlan plan2 = plan;
    plan2.seed = 8;
    TrainLog log2 = train_stage(model2, data, plan2);
    REQUIRE(log2.epochs.back().param_checksum !=
            log.epochs.back().param_checksum);
  }
}

TEST_CASE("bilingual pretrain routes hard by locale", "[training]") {
  Setup s = make_setup(63, 10, 0.1, 8);
  std::vector<Utterance> data_a = mono_utts(s.spec_a, s.space.bilingual, 12, 5);

  Rng rng(101);
  AcousticModel model(tiny_cfg(8), s.space, rng);

  SECTION("locale-b parameters receive no gradient from a locale-a pass") {
    const Utterance &u = data_a[0];
    FrameTargets t = make_frame_targets(u, s.space);
    Tape tape;
    Node *sh = model.forward_shared(tape, u.features);
    Node *logp =
        model.project_monolingual(tape, "it", model.forward_pe(tape, "it", sh));
    Node *ce = ops::cross_entropy(tape, logp, t.mono_a);
    tape.backward(ce);
    REQUIRE_FALSE(model.store.get("pe_b.0.att.wq").grad_live);
    REQUIRE(grad_norm_under(model.store, "pe_b.") == 0.0);
    REQUIRE(grad_norm_under(model.store, "head_b.") == 0.0);
    REQUIRE(grad_norm_under(model.store, "pe_a.") > 0.0);
    REQUIRE(grad_norm_under(model.store, "shared.") > 0.0);
    model.store.zero_grads();
  }

  SECTION("a pure locale-a epoch leaves the locale-b side untouched") {
    TrainingPlan plan;
    plan.stage = "bilingual-pretrain";
    plan.epochs = 1;
    plan.batch_utterances = 4;
    plan.warmup_steps = 0;
    plan.seed = 4;
    const std::uint64_t peb_before = prefix_sig(model.store, "pe_b.");
    const std::uint64_t headb_before = prefix_sig(model.store, "head_b.");
    const std::uint64_t pea_before = prefix_sig(model.store, "pe_a.");
    const std::uint64_t shared_before = prefix_sig(model.store, "shared.");

    TrainLog log = train_stage(model, data_a, plan);
    REQUIRE(prefix_sig(model.store, "pe_b.") == peb_before);
    REQUIRE(prefix_sig(model.store, "head_b.") == headb_before);
    REQUIRE(prefix_sig(model.store, "pe_a.") != pea_before);
    REQUIRE(prefix_sig(model.store, "shared.") != shared_before);
    REQUIRE(model.store.get("pe_b.0.ln1.g").step == 0);
    REQUIRE(model.store.get("shared.0.ln1.g").step == 3);  // 12 utts / 4

    REQUIRE(log.epochs.size() == 1);
    const EpochRecord &rec = log.epochs[0];
    REQUIRE(rec.components[0].first == "mono_a");
    REQUIRE(rec.weights[0].second == 1.0);  // all frames routed to a
    REQUIRE(rec.weights[1].second == 0.0);
    double sum = 0.0;
    for (std::size_t i = 0; i < rec.components.size(); ++i)
      sum += rec.weights[i].second * rec.components[i].second;
    REQUIRE(rec.total == sum);
  }

  SECTION("a mixed corpus trains both sides") {
    std::vector<Utterance> data = data_a;
    std::vector<Utterance> data_b =
        mono_utts(s.spec_b, s.space.bilingual, 12, 6);
    data.insert(data.end(), data_b.begin(), data_b.end());
    TrainingPlan plan;
    plan.stage = "bilingual-pretrain";
    plan.epochs = 2;
    plan.batch_utterances = 4;
    plan.seed = 9;
    const std::uint64_t pea_before = prefix_sig(model.store, "pe_a.");
    const std::uint64_t peb_before = prefix_sig(model.store, "pe_b.");
    TrainLog log = train_stage(model, data, plan);
    REQUIRE(prefix_sig(model.store, "pe_a.") != pea_before);
    REQUIRE(prefix_sig(model.store, "pe_b.") != peb_before);
    REQUIRE(log.epochs[1].total < log.epochs[0].total);
    // Frame-share weights sum to one across the routed components.
    REQUIRE(log.epochs[0].weights[0].second +
                log.epochs[0].weights[1].second ==
            Catch::Approx(1.0).margin(1e-12));
  }

  SECTION("code-mixed input cannot be hard-routed") {
    Utterance ua = synth_utterance(
        s.spec_a, {s.spec_a.words[0]}, 3, s.space.bilingual);
    Utterance ub = synth_utterance(
        s.spec_b, {s.spec_b.words[0]}, 4, s.space.bilingual);
    const UnitPrototype &sil = s.spec_a.prototypes.at(kSilUnit);
    Utterance mix = make_code_mixed(ua, ub, sil.mean, sil.var, 17);
    TrainingPlan plan;
    plan.stage = "bilingual-pretrain";
    CHECK_THROWS_AS(train_stage(model, {mix}, plan), DataError);
    CHECK_THROWS_WITH(train_stage(model, {mix}, plan),
                      Catch::Matchers::ContainsSubstring("single-locale"));
  }

  SECTION("an all-silence utterance routes through locale-a harmlessly") {
    Utterance quiet = synth_utterance(s.spec_a, {}, 5, s.space.bilingual);
    TrainingPlan plan;
    plan.stage = "bilingual-pretrain";
    plan.warmup_steps = 0;
    const std::uint64_t peb_before = prefix_sig(model.store, "pe_b.");
    REQUIRE_NOTHROW(train_stage(model, {quiet}, plan));
    REQUIRE(prefix_sig(model.store, "pe_b.") == peb_before);
  }
}

TEST_CASE("lid finetune freezes the shared stack and needs a pretrained model",
          "[training]") {
  Setup s = make_setup(71, 10, 0.1, 8);
  std::vector<Utterance> data = mono_utts(s.spec_a, s.space.bilingual, 10, 5);
  std::vector<Utterance> data_b = mono_utts(s.spec_b, s.space.bilingual, 10, 6);
  data.insert(data.end(), data_b.begin(), data_b.end());

  Rng rng(107);
  AcousticModel model(tiny_cfg(8), s.space, rng);

  SECTION("a fresh model is rejected") {
    TrainingPlan plan;
    plan.stage = "lid-finetune";
    CHECK_THROWS_AS(train_stage(model, data, plan), DataError);
    CHECK_THROWS_WITH(train_stage(model, data, plan),
                      Catch::Matchers::ContainsSubstring("pretrained"));
  }

  TrainingPlan pre;
  pre.stage = "bilingual-pretrain";
  pre.epochs = 1;
  pre.batch_utterances = 4;
  pre.seed = 11;
  train_stage(model, data, pre);

  SECTION("shared stack and unused heads stay bit-identical") {
    const std::uint64_t shared_before = prefix_sig(model.store, "shared.");
    const std::uint64_t in_before = prefix_sig(model.store, "in.");
    const std::uint64_t heada_before = prefix_sig(model.store, "head_a.");
    const std::uint64_t headbi_before =
        prefix_sig(model.store, "head_bilingual.");
    const std::uint64_t pea_before = prefix_sig(model.store, "pe_a.");
    const std::uint64_t lid_before = prefix_sig(model.store, "lid.");
    const std::uint64_t headc_before =
        prefix_sig(model.store, "head_combined.");

    TrainingPlan plan;
    plan.stage = "lid-finetune";
    plan.epochs = 2;
    plan.batch_utterances = 4;
    plan.warmup_steps = 0;
    plan.seed = 13;
    TrainLog log = train_stage(model, data, plan);

    REQUIRE(prefix_sig(model.store, "shared.") == shared_before);
    REQUIRE(prefix_sig(model.store, "in.") == in_before);
    REQUIRE(prefix_sig(model.store, "head_a.") == heada_before);
    REQUIRE(prefix_sig(model.store, "head_bilingual.") == headbi_before);
    REQUIRE(prefix_sig(model.store, "pe_a.") != pea_before);
    REQUIRE(prefix_sig(model.store, "lid.") != lid_before);
    REQUIRE(prefix_sig(model.store, "head_combined.") != headc_before);

    REQUIRE(log.epochs.size() == 2);
    REQUIRE(log.epochs[1].total < log.epochs[0].total);
    const EpochRecord &rec = log.epochs[0];
    REQUIRE(rec.components[0].first == "combined");
    REQUIRE(rec.components[1].first == "lid");
    REQUIRE(rec.weights[0].second == 1.0);
    REQUIRE(rec.weights[1].second == 0.02);
    REQUIRE(rec.total == rec.weights[0].second * rec.components[0].second +
                             rec.weights[1].second * rec.components[1].second);
  }

  SECTION("the shared freeze is a config switch") {
    TrainingPlan plan;
    plan.stage = "lid-finetune";
    plan.epochs = 1;
    plan.batch_utterances = 4;
    plan.finetune_freezes_shared = false;
    plan.seed = 13;
    const std::uint64_t shared_before = prefix_sig(model.store, "shared.");
    train_stage(model, data, plan);
    REQUIRE(prefix_sig(model.store, "shared.") != shared_before);
  }

  SECTION("extra frozen prefixes are honored") {
    TrainingPlan plan;
    plan.stage = "lid-finetune";
    plan.epochs = 1;
    plan.batch_utterances = 4;
    plan.frozen_prefixes = {"pe_a."};
    plan.seed = 13;
    const std::uint64_t pea_before = prefix_sig(model.store, "pe_a.");
    const std::uint64_t peb_before = prefix_sig(model.store, "pe_b.");
    train_stage(model, data, plan);
    REQUIRE(prefix_sig(model.store, "pe_a.") == pea_before);
    REQUIRE(prefix_sig(model.store, "pe_b.") != peb_before);
  }
}

TEST_CASE("zero aux weights match a bilingual-only trainer step for step",
          "[training]") {
  Setup s = make_setup(83, 10, 0.1, 8);
  std::vector<Utterance> data = mono_utts(s.spec_a, s.space.bilingual, 8, 5);
  std::vector<Utterance> data_b = mono_utts(s.spec_b, s.space.bilingual, 8, 6);
  data.insert(data.end(), data_b.begin(), data_b.end());
  std::vector<FrameTargets> targets;
  for (const Utterance &u : data)
    targets.push_back(make_frame_targets(u, s.space));

  TrainingPlan plan;
  plan.stage = "aux-joint";
  plan.aux_loss_weight_a = 0.0;
  plan.aux_loss_weight_b = 0.0;
  plan.epochs = 2;
  plan.batch_utterances = 4;
  plan.warmup_steps = 5;
  plan.seed = 3;

  Rng rng1(5);
  AcousticModel m1(tiny_cfg(8), s.space, rng1);
  TrainLog log1 = train_stage(m1, data, plan);

  // Independent shared-projection-only trainer: same shuffle, batching,
  // warmup and Adam settings, but the graph never includes the mono heads.
  Rng rng2(5);
  AcousticModel m2(tiny_cfg(8), s.space, rng2);
  const std::vector<std::string> prefixes = {"in.", "shared.", "pe_a.",
                                             "pe_b.", "head_bilingual."};
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= plan.epochs; ++epoch) {
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(mix_seed(plan.seed, epoch));
    shuffle_rng.shuffle(order);
    for (std::size_t begin = 0; begin < order.size();
         begin += plan.batch_utterances) {
      const std::size_t end =
          std::min(begin + plan.batch_utterances, order.size());
      double batch_frames = 0.0;
      for (std::size_t i = begin; i < end; ++i)
        batch_frames += static_cast<double>(data[order[i]].frames());
      Tape tape;
      std::vector<std::pair<Node *, double>> terms;
      for (std::size_t i = begin; i < end; ++i) {
        const Utterance &u = data[order[i]];
        Node *sh = m2.forward_shared(tape, u.features);
        Node *ha = m2.forward_pe(tape, "it", sh);  // build order fixes the
        Node *hb = m2.forward_pe(tape, "en", sh);  // gradient-sweep order
        Node *bi = m2.project_bilingual(tape, ha, hb);
        Node *ce = ops::cross_entropy(tape, bi, targets[order[i]].bilingual);
        terms.emplace_back(
            ce, static_cast<double>(u.frames()) / batch_frames);
      }
      tape.backward(ops::weighted_sum(tape, terms));
      ++step;
      double lr = plan.learning_rate;
      if (step < plan.warmup_steps)
        lr *= static_cast<double>(step) /
              static_cast<double>(plan.warmup_steps);
      m2.store.adam_step(lr, plan.beta1, plan.beta2, plan.eps,
                         [&prefixes](const std::string &name) {
                           for (const std::string &p : prefixes)
                             if (name.compare(0, p.size(), p) == 0)
                               return true;
                           return false;
                         });
    }
    REQUIRE(m2.store.value_checksum() ==
            log1.epochs[epoch - 1].param_checksum);
  }
  REQUIRE(m1.store.value_checksum() == m2.store.value_checksum());
}

TEST_CASE("training resumes identically from a saved checkpoint",
          "[training]") {
  Setup s = make_setup(91, 10, 0.1, 8);
  std::vector<Utterance> data = mono_utts(s.spec_a, s.space.bilingual, 8, 5);
  std::vector<Utterance> data_b = mono_utts(s.spec_b, s.space.bilingual, 8, 6);
  data.insert(data.end(), data_b.begin(), data_b.end());

  auto dir = fresh_dir("resume");
  Rng rng(113);
  AcousticModel model(tiny_cfg(8), s.space, rng);

  TrainingPlan pre;
  pre.stage = "bilingual-pretrain";
  pre.epochs = 1;
  pre.batch_utterances = 4;
  pre.seed = 19;
  train_stage(model, data, pre);

  const std::string prefix = (dir / "pretrained").string();
  model.save(prefix);
  AcousticModel loaded = AcousticModel::load(prefix);

  // Save -> load -> save reproduces the checkpoint byte for byte.
  const std::string prefix2 = (dir / "again").string();
  loaded.save(prefix2);
  REQUIRE(read_text_file(prefix + ".ckpt") ==
          read_text_file(prefix2 + ".ckpt"));

  TrainingPlan fin;
  fin.stage = "lid-finetune";
  fin.epochs = 1;
  fin.batch_utterances = 4;
  fin.seed = 23;
  TrainLog log_orig = train_stage(model, data, fin);
  TrainLog log_loaded = train_stage(loaded, data, fin);
  REQUIRE(records_equal_ignoring_wall(log_orig.epochs[0],
                                      log_loaded.epochs[0]));
  REQUIRE(model.store.value_checksum() == loaded.store.value_checksum());

  std::filesystem::remove_all(dir);
}

TEST_CASE("epoch records serialize with documented keys", "[training]") {
  Setup s = make_setup(97, 10, 0.1, 8);
  std::vector<Utterance> data = mono_utts(s.spec_a, s.space.bilingual, 4, 5);
  std::vector<Utterance> data_b = mono_utts(s.spec_b, s.space.bilingual, 4, 6);
  data.insert(data.end(), data_b.begin(), data_b.end());
  Rng rng(127);
  AcousticModel model(tiny_cfg(8), s.space, rng);
  TrainingPlan plan;
  plan.stage = "aux-joint";
  plan.epochs = 2;
  plan.batch_utterances = 4;
  plan.seed = 29;
  TrainLog log = train_stage(model, data, plan);

  const std::string line = format_epoch_record(log.epochs[0], log.stage);
  REQUIRE(line.rfind("epoch\t1\tstage\taux-joint\tframes\t", 0) == 0);
  for (const char *key :
       {"\tloss_total\t", "\tloss_bilingual\t", "\tweight_bilingual\t",
        "\tloss_mono_a\t", "\tloss_mono_b\t", "\tacc_bilingual\t",
        "\tacc_mono_a\t", "\tacc_mono_b\t", "\tparam_checksum\t",
        "\twall_ms\t"})
    REQUIRE(line.find(key) != std::string::npos);

  // Tab-separated key/value pairs, wall_ms last.
  std::vector<std::string> fields;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    const std::size_t tab = line.find('\t', pos);
    fields.push_back(line.substr(pos, tab - pos));
    if (tab == std::string::npos) break;
    pos = tab + 1;
  }
  REQUIRE(fields.size() % 2 == 0);
  REQUIRE(fields[fields.size() - 2] == "wall_ms");

  auto dir = fresh_dir("log");
  const std::string path = (dir / "train.log").string();
  save_train_log(path, log);
  const std::string text = read_text_file(path);
  REQUIRE(std::count(text.begin(), text.end(), '\n') == 2);
  REQUIRE(text.find("epoch\t2\t") != std::string::npos);
  std::filesystem::remove_all(dir);
}
