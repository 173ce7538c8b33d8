// tests/test_model.cpp

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

#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "blxam/model.hpp"
#include "blxam/ops.hpp"
#include "blxam/rng.hpp"

using namespace blxam;

namespace {

Tensor random_features(Rng &rng, std::size_t t, std::size_t d) {
  Tensor x({t, d});
  for (double &v : x.v) v = rng.normal();
  return x;
}

double rel_err(double a, double b) {
  return std::fabs(a - b) / std::max(std::fabs(a) + std::fabs(b), 1e-4);
}

bool same_values(const Tensor &a, const Tensor &b) {
  if (a.shape != b.shape) return false;
  for (std::size_t i = 0; i < a.numel(); ++i)
    if (a.v[i] != b.v[i]) return false;
  return true;
}

BilingualSpaceMap small_space() {
  GraphemeLexicon la = build_lexicon({"di", "la", "ma"}, "it");
  GraphemeLexicon lb = build_lexicon({"do", "go"}, "en");
  return merge_inventories(la, lb);
}

// Equal-sized per-locale inventories, for the symmetry test.
BilingualSpaceMap symmetric_space() {
  GraphemeLexicon la = build_lexicon({"di"}, "it");
  GraphemeLexicon lb = build_lexicon({"go"}, "en");
  return merge_inventories(la, lb);
}

ModelConfig tiny_config() {
  ModelConfig c;
  c.feature_dim = 5;
  c.model_dim = 8;
  c.heads = 2;
  c.ff_dim = 12;
  c.n_shared_layers = 2;
  c.n_pe_layers = 1;
  c.n_lid_layers = 1;
  c.chunk_frames = 4;
  return c;
}

struct TapeOut {
  Tensor bi, mono_a, mono_b, combined, lid, pe_a, pe_b;
};

// Whole-utterance forward on the tape, every output path.
TapeOut tape_forward(AcousticModel &m, const Tensor &feats) {
  Tape t;
  Node *sh = m.forward_shared(t, feats);
  Node *ha = m.forward_pe(t, m.config.locale_a, sh);
  Node *hb = m.forward_pe(t, m.config.locale_b, sh);
  AcousticModel::LidNodes lid = m.lid_forward(t, sh);
  Node *bi = m.project_bilingual(t, ha, hb);
  Node *ma = m.project_monolingual(t, m.config.locale_a, ha);
  Node *mb = m.project_monolingual(t, m.config.locale_b, hb);
  Node *cmb = ops::soft_combine(t, ha, hb, lid.probs);
  Node *pc = m.project_lid_combined(t, cmb);
  TapeOut o{bi->val,  ma->val, mb->val, pc->val,
            lid.probs->val, ha->val, hb->val};
  t.clear();
  return o;
}

Node *composite_loss(AcousticModel &m, Tape &t, const Tensor &feats,
                     const std::vector<int> &y_bi,
                     const std::vector<int> &y_a, const std::vector<int> &y_b,
                     const std::vector<int> &y_lid) {
  Node *sh = m.forward_shared(t, feats);
  Node *ha = m.forward_pe(t, m.config.locale_a, sh);
  Node *hb = m.forward_pe(t, m.config.locale_b, sh);
  AcousticModel::LidNodes lid = m.lid_forward(t, sh);
  Node *l_bi = ops::cross_entropy(t, m.project_bilingual(t, ha, hb), y_bi);
  Node *l_a =
      ops::cross_entropy(t, m.project_monolingual(t, m.config.locale_a, ha),
                         y_a);
  Node *l_b =
      ops::cross_entropy(t, m.project_monolingual(t, m.config.locale_b, hb),
                         y_b);
  Node *l_lid = ops::cross_entropy(t, lid.logits, y_lid);
  Node *cmb = ops::soft_combine(t, ha, hb, lid.probs);
  Node *l_c = ops::cross_entropy(t, m.project_lid_combined(t, cmb), y_bi);
  return ops::weighted_sum(
      t, {{l_bi, 1.0}, {l_a, 1.0}, {l_b, 1.0}, {l_lid, 1.0}, {l_c, 1.0}});
}

void check_rows_normalize_logp(const Tensor &logp, double tol) {
  for (std::size_t i = 0; i < logp.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < logp.cols(); ++j)
      s += std::exp(logp.at(i, j));
    CHECK(std::fabs(s - 1.0) < tol);
  }
}

}  // namespace

TEST_CASE("model config validation") {
  ModelConfig c = tiny_config();
  CHECK_NOTHROW(c.validate());

  ModelConfig bad = c;
  bad.n_shared_layers = 0;
  CHECK_THROWS_WITH(bad.validate(),
                    Catch::Matchers::ContainsSubstring("n_shared_layers"));
  bad = c;
  bad.n_pe_layers = 0;
  CHECK_THROWS_WITH(bad.validate(),
                    Catch::Matchers::ContainsSubstring("n_pe_layers"));
  bad = c;
  bad.n_lid_layers = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.heads = 3;  // 8 % 3 != 0
  CHECK_THROWS_WITH(bad.validate(),
                    Catch::Matchers::ContainsSubstring("divisible"));
  bad = c;
  bad.locale_b = bad.locale_a;
  CHECK_THROWS_WITH(bad.validate(),
                    Catch::Matchers::ContainsSubstring("differ"));
  bad = c;
  bad.combination_mode = "blend";
  CHECK_THROWS_WITH(bad.validate(),
                    Catch::Matchers::ContainsSubstring("combination_mode"));
  bad = c;
  bad.chunk_frames = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  CHECK(parse_output_mode("bilingual") == OutputMode::kBilingual);
  CHECK(parse_output_mode("mono-a") == OutputMode::kMonoA);
  CHECK(parse_output_mode("mono-b") == OutputMode::kMonoB);
  CHECK(parse_output_mode("lid-combined") == OutputMode::kLidCombined);
  CHECK_THROWS_AS(parse_output_mode("stereo"), ConfigError);
  CHECK(output_mode_name(OutputMode::kLidCombined) == "lid-combined");
}

TEST_CASE("model construction is deterministic and shapes are right") {
  BilingualSpaceMap sp = small_space();
  ModelConfig cfg = tiny_config();
  Rng r1(7), r2(7), r3(8);
  AcousticModel m1(cfg, sp, r1);
  AcousticModel m2(cfg, sp, r2);
  AcousticModel m3(cfg, sp, r3);
  CHECK(m1.store.value_checksum() == m2.store.value_checksum());
  CHECK(m1.store.value_checksum() != m3.store.value_checksum());

  const std::size_t d = cfg.model_dim;
  CHECK(m1.store.get("head_a.w").value.shape ==
        std::vector<std::size_t>{d, sp.space_a.size()});
  CHECK(m1.store.get("head_b.w").value.shape ==
        std::vector<std::size_t>{d, sp.space_b.size()});
  CHECK(m1.store.get("head_bilingual.w").value.shape ==
        std::vector<std::size_t>{2 * d, sp.bilingual.size()});
  CHECK(m1.store.get("head_combined.w").value.shape ==
        std::vector<std::size_t>{d, sp.bilingual.size()});
  CHECK(m1.store.get("lid.proj.w").value.shape ==
        std::vector<std::size_t>{d, std::size_t{3}});
  CHECK(m1.out_width(OutputMode::kBilingual) == sp.bilingual.size());
  CHECK(m1.out_width(OutputMode::kMonoA) == sp.space_a.size());
  CHECK(m1.out_width(OutputMode::kMonoB) == sp.space_b.size());
  // Layer-norm gains start at one.
  for (double v : m1.store.get("shared.0.ln1.g").value.v) CHECK(v == 1.0);
}

TEST_CASE("tape forward produces normalized posteriors") {
  Rng rng(11);
  AcousticModel m(tiny_config(), small_space(), rng);
  Tensor feats = random_features(rng, 5, m.config.feature_dim);
  TapeOut o = tape_forward(m, feats);

  CHECK(o.bi.rows() == 5);
  CHECK(o.bi.cols() == m.space.bilingual.size());
  CHECK(o.mono_a.cols() == m.space.space_a.size());
  CHECK(o.mono_b.cols() == m.space.space_b.size());
  CHECK(o.combined.cols() == m.space.bilingual.size());
  CHECK(o.pe_a.cols() == m.config.model_dim);

  check_rows_normalize_logp(o.bi, 1e-10);
  check_rows_normalize_logp(o.mono_a, 1e-10);
  check_rows_normalize_logp(o.mono_b, 1e-10);
  check_rows_normalize_logp(o.combined, 1e-10);
  for (std::size_t i = 0; i < o.lid.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(o.lid.at(i, j) >= 0.0);
      s += o.lid.at(i, j);
    }
    CHECK(std::fabs(s - 1.0) < 1e-12);
  }

  SECTION("same input twice gives bit-identical output") {
    TapeOut o2 = tape_forward(m, feats);
    CHECK(same_values(o.bi, o2.bi));
    CHECK(same_values(o.combined, o2.combined));
  }
  SECTION("feature dim mismatch is rejected") {
    Tape t;
    Tensor bad({3, m.config.feature_dim + 1});
    CHECK_THROWS_WITH(m.forward_shared(t, bad),
                      Catch::Matchers::ContainsSubstring("feature_dim"));
    t.clear();
  }
  SECTION("unknown locale is rejected") {
    Tape t;
    Node *sh = m.forward_shared(t, feats);
    CHECK_THROWS_WITH(m.forward_pe(t, "fr", sh),
                      Catch::Matchers::ContainsSubstring("unknown locale"));
    t.clear();
  }
}

TEST_CASE("zero-frame input gives zero-frame output") {
  Rng rng(3);
  AcousticModel m(tiny_config(), small_space(), rng);
  Tensor empty({std::size_t{0}, m.config.feature_dim});

  TapeOut o = tape_forward(m, empty);
  CHECK(o.bi.rows() == 0);
  CHECK(o.lid.rows() == 0);

  ForwardOutput fo = m.forward_all(empty);
  CHECK(fo.logp_bilingual.rows() == 0);
  CHECK(fo.pe_b.rows() == 0);

  StreamState st = m.new_stream();
  Tensor out = m.streaming_forward(empty, st, OutputMode::kBilingual);
  CHECK(out.rows() == 0);
  CHECK(st.frames == 0);
}

TEST_CASE("streaming equals the training forward bit-exactly") {
  Rng rng(21);
  AcousticModel m(tiny_config(), small_space(), rng);
  const std::size_t t_len = 11;
  Tensor feats = random_features(rng, t_len, m.config.feature_dim);

  TapeOut train = tape_forward(m, feats);
  ForwardOutput full = m.forward_all(feats);

  // Training path and whole-utterance streaming agree to the bit.
  CHECK(same_values(train.bi, full.logp_bilingual));
  CHECK(same_values(train.mono_a, full.logp_mono_a));
  CHECK(same_values(train.mono_b, full.logp_mono_b));
  CHECK(same_values(train.combined, full.logp_combined));
  CHECK(same_values(train.lid, full.lid_probs));
  CHECK(same_values(train.pe_a, full.pe_a));
  CHECK(same_values(train.pe_b, full.pe_b));

  // Any chunking of the feed reproduces the same bytes.
  const std::vector<std::vector<std::size_t>> chunkings = {
      std::vector<std::size_t>(t_len, 1),  // frame at a time
      {4, 4, 3},
      {2, 4, 4, 1},
      {1, 4, 2, 4},
  };
  const std::vector<OutputMode> modes = {
      OutputMode::kBilingual, OutputMode::kMonoA, OutputMode::kMonoB,
      OutputMode::kLidCombined};
  for (const auto &sizes : chunkings) {
    for (OutputMode mode : modes) {
      StreamState st = m.new_stream();
      std::size_t row = 0;
      const Tensor &ref = mode == OutputMode::kBilingual
                              ? full.logp_bilingual
                              : mode == OutputMode::kMonoA
                                    ? full.logp_mono_a
                                    : mode == OutputMode::kMonoB
                                          ? full.logp_mono_b
                                          : full.logp_combined;
      for (std::size_t sz : sizes) {
        Tensor chunk({sz, m.config.feature_dim});
        for (std::size_t r = 0; r < sz; ++r)
          for (std::size_t c = 0; c < m.config.feature_dim; ++c)
            chunk.at(r, c) = feats.at(row + r, c);
        Tensor out = m.streaming_forward(chunk, st, mode, row);
        REQUIRE(out.rows() == sz);
        for (std::size_t r = 0; r < sz; ++r)
          for (std::size_t c = 0; c < out.cols(); ++c)
            REQUIRE(out.at(r, c) == ref.at(row + r, c));
        row += sz;
      }
      CHECK(st.frames == t_len);
    }
  }
}

TEST_CASE("streaming matches training under a finite left context") {
  Rng rng(31);
  ModelConfig cfg = tiny_config();
  cfg.left_context_frames = 3;
  AcousticModel m(cfg, small_space(), rng);
  Tensor feats = random_features(rng, 9, cfg.feature_dim);

  TapeOut train = tape_forward(m, feats);
  ForwardOutput full = m.forward_all(feats);
  CHECK(same_values(train.bi, full.logp_bilingual));
  CHECK(same_values(train.combined, full.logp_combined));

  StreamState st = m.new_stream();
  Tensor c1({4, cfg.feature_dim}), c2({5, cfg.feature_dim});
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < cfg.feature_dim; ++c)
      c1.at(r, c) = feats.at(r, c);
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 0; c < cfg.feature_dim; ++c)
      c2.at(r, c) = feats.at(4 + r, c);
  // chunk_frames=4: a 5-frame chunk must be rejected, so feed 4 + 4 + 1.
  CHECK_THROWS_WITH(m.streaming_forward(c2, st, OutputMode::kBilingual),
                    Catch::Matchers::ContainsSubstring("exceeds"));
  Tensor o1 = m.streaming_forward(c1, st, OutputMode::kBilingual);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < o1.cols(); ++c)
      REQUIRE(o1.at(r, c) == full.logp_bilingual.at(r, c));
}

TEST_CASE("streaming is causal and rejects bad feeds") {
  Rng rng(41);
  AcousticModel m(tiny_config(), small_space(), rng);
  Tensor feats = random_features(rng, 8, m.config.feature_dim);

  // Prefix outputs do not depend on later chunks.
  Tensor c1({3, m.config.feature_dim}), c2({3, m.config.feature_dim}),
      c3({2, m.config.feature_dim});
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < m.config.feature_dim; ++c) {
      c1.at(r, c) = feats.at(r, c);
      c2.at(r, c) = feats.at(3 + r, c);
    }
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < m.config.feature_dim; ++c)
      c3.at(r, c) = feats.at(6 + r, c);

  StreamState s_short = m.new_stream(), s_long = m.new_stream();
  Tensor a1 = m.streaming_forward(c1, s_short, OutputMode::kLidCombined);
  Tensor a2 = m.streaming_forward(c2, s_short, OutputMode::kLidCombined);
  Tensor b1 = m.streaming_forward(c1, s_long, OutputMode::kLidCombined);
  Tensor b2 = m.streaming_forward(c2, s_long, OutputMode::kLidCombined);
  Tensor b3 = m.streaming_forward(c3, s_long, OutputMode::kLidCombined);
  CHECK(same_values(a1, b1));
  CHECK(same_values(a2, b2));
  CHECK(b3.rows() == 2);

  SECTION("oversized chunk is rejected") {
    StreamState st = m.new_stream();
    Tensor big({m.config.chunk_frames + 1, m.config.feature_dim});
    CHECK_THROWS_WITH(m.streaming_forward(big, st, OutputMode::kBilingual),
                      Catch::Matchers::ContainsSubstring("exceeds"));
  }
  SECTION("out-of-order chunk is rejected") {
    StreamState st = m.new_stream();
    m.streaming_forward(c1, st, OutputMode::kBilingual, 0);
    CHECK_THROWS_WITH(m.streaming_forward(c1, st, OutputMode::kBilingual, 0),
                      Catch::Matchers::ContainsSubstring("out of order"));
    CHECK_THROWS_WITH(m.streaming_forward(c1, st, OutputMode::kBilingual, 7),
                      Catch::Matchers::ContainsSubstring("out of order"));
    CHECK_NOTHROW(m.streaming_forward(c2, st, OutputMode::kBilingual, 3));
  }
  SECTION("wrong feature width is rejected") {
    StreamState st = m.new_stream();
    Tensor bad({2, m.config.feature_dim + 2});
    CHECK_THROWS_WITH(m.streaming_forward(bad, st, OutputMode::kBilingual),
                      Catch::Matchers::ContainsSubstring("feature_dim"));
  }
}

TEST_CASE("identically initialized PE stacks and heads are symmetric") {
  Rng rng(5);
  BilingualSpaceMap sp = symmetric_space();
  REQUIRE(sp.space_a.size() == sp.space_b.size());
  AcousticModel m(tiny_config(), sp, rng);
  // Copy locale-a parameters onto locale-b so the two paths are identical.
  for (auto &[name, p] : m.store.params()) {
    if (name.rfind("pe_a.", 0) == 0)
      m.store.get("pe_b." + name.substr(5)).value = p.value;
    if (name.rfind("head_a.", 0) == 0)
      m.store.get("head_b." + name.substr(7)).value = p.value;
  }
  Tensor feats = random_features(rng, 6, m.config.feature_dim);
  ForwardOutput fo = m.forward_all(feats);
  CHECK(same_values(fo.pe_a, fo.pe_b));
  CHECK(same_values(fo.logp_mono_a, fo.logp_mono_b));
}

TEST_CASE("combined path matches a componentwise recomputation") {
  Rng rng(17);
  AcousticModel m(tiny_config(), small_space(), rng);
  Tensor feats = random_features(rng, 7, m.config.feature_dim);
  ForwardOutput fo = m.forward_all(feats);

  const std::size_t d = m.config.model_dim;
  const std::size_t n = m.space.bilingual.size();
  const Tensor &w = m.store.get("head_combined.w").value;
  const Tensor &b = m.store.get("head_combined.b").value;
  std::vector<double> comb(d), logits(n), logp(n);
  for (std::size_t t = 0; t < feats.rows(); ++t) {
    kernels::combine_row(fo.pe_a.row(t), fo.pe_b.row(t), fo.lid_probs.at(t, 0),
                         fo.lid_probs.at(t, 1), d, comb.data());
    std::fill(logits.begin(), logits.end(), 0.0);
    kernels::matmul_acc(comb.data(), 1, d, w.v.data(), n, logits.data());
    for (std::size_t j = 0; j < n; ++j) logits[j] += b.v[j];
    kernels::log_softmax_row(logits.data(), n, logp.data());
    for (std::size_t j = 0; j < n; ++j)
      REQUIRE(logp[j] == fo.logp_combined.at(t, j));
  }
}

TEST_CASE("untrained LID is near-uniform over random frames") {
  Rng rng(101);
  AcousticModel m(tiny_config(), small_space(), rng);
  Tensor feats = random_features(rng, 100, m.config.feature_dim);
  ForwardOutput fo = m.forward_all(feats);
  for (std::size_t j = 0; j < 3; ++j) {
    double mean = 0.0;
    for (std::size_t t = 0; t < 100; ++t) mean += fo.lid_probs.at(t, j);
    mean /= 100.0;
    CHECK(mean > 0.1);
    CHECK(mean < 0.9);
  }
}

TEST_CASE("gradient through the concatenation reaches both PE stacks") {
  Rng rng(13);
  AcousticModel m(tiny_config(), small_space(), rng);
  Tensor feats = random_features(rng, 4, m.config.feature_dim);
  Tape t;
  Node *sh = m.forward_shared(t, feats);
  Node *ha = m.forward_pe(t, m.config.locale_a, sh);
  Node *hb = m.forward_pe(t, m.config.locale_b, sh);
  Node *bi = m.project_bilingual(t, ha, hb);
  std::vector<int> y(4, 1);
  t.backward(ops::cross_entropy(t, bi, y));
  auto grad_norm = [&](const std::string &name) {
    double s = 0.0;
    for (double g : m.store.get(name).grad.v) s += g * g;
    return s;
  };
  CHECK(grad_norm("pe_a.0.ff.w1") > 0.0);
  CHECK(grad_norm("pe_b.0.ff.w1") > 0.0);
  CHECK(grad_norm("shared.0.att.wq") > 0.0);
  m.store.zero_grads();
}

TEST_CASE("full-model gradient check on a 6-frame batch") {
  Rng rng(23);
  ModelConfig cfg;
  cfg.feature_dim = 3;
  cfg.model_dim = 4;
  cfg.heads = 2;
  cfg.ff_dim = 5;
  cfg.n_shared_layers = 1;
  cfg.n_pe_layers = 1;
  cfg.n_lid_layers = 1;
  cfg.chunk_frames = 4;
  BilingualSpaceMap sp = symmetric_space();
  AcousticModel m(cfg, sp, rng);

  const std::size_t t_len = 6;
  Tensor feats = random_features(rng, t_len, cfg.feature_dim);
  std::vector<int> y_bi(t_len), y_a(t_len), y_b(t_len), y_lid(t_len);
  for (std::size_t i = 0; i < t_len; ++i) {
    y_bi[i] = static_cast<int>(
        rng.uniform_int(0, static_cast<std::int64_t>(sp.bilingual.size()) - 1));
    y_a[i] = static_cast<int>(
        rng.uniform_int(0, static_cast<std::int64_t>(sp.space_a.size()) - 1));
    y_b[i] = static_cast<int>(
        rng.uniform_int(0, static_cast<std::int64_t>(sp.space_b.size()) - 1));
    y_lid[i] = static_cast<int>(rng.uniform_int(0, 2));
  }

  auto loss_value = [&]() {
    Tape t;
    Node *loss = composite_loss(m, t, feats, y_bi, y_a, y_b, y_lid);
    double v = loss->val.v[0];
    t.clear();
    return v;
  };

  {
    Tape t;
    t.backward(composite_loss(m, t, feats, y_bi, y_a, y_b, y_lid));
  }
  std::map<std::string, Tensor> analytic;
  for (auto &[name, p] : m.store.params()) analytic[name] = p.grad;
  m.store.zero_grads();

  const double h = 1e-5;
  double max_rel = 0.0;
  std::size_t zero_grad_params = 0;
  for (auto &[name, p] : m.store.params()) {
    const Tensor &g = analytic[name];
    bool any_nonzero = false;
    for (std::size_t i = 0; i < p.value.numel(); ++i) {
      if (g.v[i] != 0.0) any_nonzero = true;
      const double keep = p.value.v[i];
      p.value.v[i] = keep + h;
      const double fp = loss_value();
      p.value.v[i] = keep - h;
      const double fm = loss_value();
      p.value.v[i] = keep;
      const double fd = (fp - fm) / (2.0 * h);
      max_rel = std::max(max_rel, rel_err(fd, g.v[i]));
    }
    if (!any_nonzero) ++zero_grad_params;
  }
  INFO("max relative error " << max_rel);
  CHECK(max_rel < 1e-4);
  CHECK(zero_grad_params == 0);
}

TEST_CASE("frozen model evaluates concurrently per-thread streams") {
  Rng rng(57);
  const AcousticModel m(tiny_config(), small_space(), rng);
  Tensor f1 = random_features(rng, 8, m.config.feature_dim);
  Tensor f2 = random_features(rng, 8, m.config.feature_dim);
  ForwardOutput ref1 = m.forward_all(f1);
  ForwardOutput ref2 = m.forward_all(f2);

  Tensor out1, out2;
  auto run = [&m](const Tensor &f, Tensor *out) {
    StreamState st = m.new_stream();
    Tensor a({4, f.cols()}), b({4, f.cols()});
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t c = 0; c < f.cols(); ++c) {
        a.at(r, c) = f.at(r, c);
        b.at(r, c) = f.at(4 + r, c);
      }
    Tensor o1 = m.streaming_forward(a, st, OutputMode::kBilingual);
    Tensor o2 = m.streaming_forward(b, st, OutputMode::kBilingual);
    Tensor all({8, o1.cols()});
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t c = 0; c < o1.cols(); ++c) {
        all.at(r, c) = o1.at(r, c);
        all.at(4 + r, c) = o2.at(r, c);
      }
    *out = all;
  };
  std::thread th1(run, std::cref(f1), &out1);
  std::thread th2(run, std::cref(f2), &out2);
  th1.join();
  th2.join();
  CHECK(same_values(out1, ref1.logp_bilingual));
  CHECK(same_values(out2, ref2.logp_bilingual));
}

TEST_CASE("model save and load round-trips") {
  namespace fs = std::filesystem;
  const fs::path dir =
      fs::temp_directory_path() /
      ("blxam_model_test_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::string prefix = (dir / "am").string();

  Rng rng(77);
  ModelConfig cfg = tiny_config();
  AcousticModel m(cfg, small_space(), rng);

  // Populate optimizer state with one real step.
  Tensor feats = random_features(rng, 5, cfg.feature_dim);
  std::vector<int> y_bi(5, 1), y_a(5, 1), y_b(5, 1), y_lid(5, 0);
  {
    Tape t;
    t.backward(composite_loss(m, t, feats, y_bi, y_a, y_b, y_lid));
  }
  m.store.adam_step(1e-3);
  m.save(prefix);

  AcousticModel loaded = AcousticModel::load(prefix);
  CHECK(loaded.store.value_checksum() == m.store.value_checksum());
  CHECK(loaded.config.model_dim == cfg.model_dim);
  CHECK(loaded.config.locale_a == cfg.locale_a);
  CHECK(loaded.space.bilingual.units == m.space.bilingual.units);
  CHECK(loaded.space.sharing == m.space.sharing);
  CHECK(loaded.store.get("in.w").step == 1);
  CHECK(same_values(loaded.store.get("in.w").m, m.store.get("in.w").m));

  ForwardOutput a = m.forward_all(feats);
  ForwardOutput b = loaded.forward_all(feats);
  CHECK(same_values(a.logp_bilingual, b.logp_bilingual));
  CHECK(same_values(a.logp_combined, b.logp_combined));
  CHECK(same_values(a.lid_probs, b.lid_probs));

  SECTION("meta header tampering is rejected") {
    std::string meta = read_text_file(prefix + ".meta");
    atomic_write_text(prefix + ".meta",
                      "blxam-model\tv2\n" + meta.substr(meta.find('\n') + 1));
    CHECK_THROWS_WITH(AcousticModel::load(prefix),
                      Catch::Matchers::ContainsSubstring("model description"));
    atomic_write_text(prefix + ".meta", meta);
  }
  SECTION("checkpoint missing a parameter is rejected") {
    std::string meta = read_text_file(prefix + ".meta");
    std::string grown = meta;
    const std::string key = "n_shared_layers\t2";
    REQUIRE(grown.find(key) != std::string::npos);
    grown.replace(grown.find(key), key.size(), "n_shared_layers\t3");
    atomic_write_text(prefix + ".meta", grown);
    CHECK_THROWS_WITH(AcousticModel::load(prefix),
                      Catch::Matchers::ContainsSubstring("missing parameter"));
    atomic_write_text(prefix + ".meta", meta);
  }
  SECTION("checkpoint with extra parameters is rejected") {
    std::string meta = read_text_file(prefix + ".meta");
    std::string shrunk = meta;
    const std::string key = "n_shared_layers\t2";
    REQUIRE(shrunk.find(key) != std::string::npos);
    shrunk.replace(shrunk.find(key), key.size(), "n_shared_layers\t1");
    atomic_write_text(prefix + ".meta", shrunk);
    CHECK_THROWS_AS(AcousticModel::load(prefix), DataError);
    atomic_write_text(prefix + ".meta", meta);
  }
  SECTION("missing checkpoint file is rejected") {
    fs::remove(prefix + ".ckpt");
    CHECK_THROWS_AS(AcousticModel::load(prefix), DataError);
  }
  fs::remove_all(dir);
}
