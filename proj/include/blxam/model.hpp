// blxam/model.hpp

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

#ifndef BLXAM_MODEL_HPP_
#define BLXAM_MODEL_HPP_

#include <cstring>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "blxam/checkpoint.hpp"
#include "blxam/error.hpp"
#include "blxam/fileio.hpp"
#include "blxam/kernels.hpp"
#include "blxam/lexicon.hpp"
#include "blxam/ops.hpp"
#include "blxam/param_store.hpp"
#include "blxam/rng.hpp"
#include "blxam/tape.hpp"
#include "blxam/tensor.hpp"

// Bilingual streaming Transformer acoustic model: input projection with
// sinusoidal positions, shared encoder stack, one parallel encoder (PE)
// stack per locale, an LID head over the shared output, per-locale
// projection heads, a shared bilingual projection over the concatenated
// PE outputs, and a head over the sil-renormalized soft combination.
//
// Two forward paths exist: the tape path (training, gradients) and the
// row-at-a-time streaming path (no gradients, key/value caches). They
// call the same kernels in the same order, so a frame's posterior is
// bit-identical no matter how the utterance is chunked. Any edit to one
// path must be mirrored in the other.

namespace blxam {

inline constexpr double kLnEps = 1e-5;

struct ModelConfig {
  std::size_t feature_dim = 16;
  std::size_t model_dim = 64;
  std::size_t heads = 4;
  std::size_t ff_dim = 128;
  std::size_t n_shared_layers = 4;
  std::size_t n_pe_layers = 2;
  std::size_t n_lid_layers = 1;
  std::size_t chunk_frames = 8;
  std::size_t left_context_frames = ops::kUnlimitedContext;
  std::string locale_a = "it";
  std::string locale_b = "en";
  std::string combination_mode = "lid";  // "lid" or "aux"

  void validate() const {
    BLXAM_CONFIG_CHECK(feature_dim >= 1, "feature_dim must be >= 1");
    BLXAM_CONFIG_CHECK(model_dim >= 2, "model_dim must be >= 2");
    BLXAM_CONFIG_CHECK(heads >= 1 && model_dim % heads == 0,
                       "model_dim " << model_dim << " not divisible by heads "
                                    << heads);
    BLXAM_CONFIG_CHECK(ff_dim >= 1, "ff_dim must be >= 1");
    BLXAM_CONFIG_CHECK(n_shared_layers >= 1,
                       "n_shared_layers must be >= 1, got "
                           << n_shared_layers);
    BLXAM_CONFIG_CHECK(n_pe_layers >= 1,
                       "n_pe_layers must be >= 1, got " << n_pe_layers);
    BLXAM_CONFIG_CHECK(n_lid_layers >= 1,
                       "n_lid_layers must be >= 1, got " << n_lid_layers);
    BLXAM_CONFIG_CHECK(chunk_frames >= 1, "chunk_frames must be >= 1");
    BLXAM_CONFIG_CHECK(!locale_a.empty() && !locale_b.empty(),
                       "locale names must be non-empty");
    BLXAM_CONFIG_CHECK(locale_a != locale_b,
                       "locales must differ, both are '" << locale_a << "'");
    BLXAM_CONFIG_CHECK(combination_mode == "lid" || combination_mode == "aux",
                       "combination_mode must be 'lid' or 'aux', got '"
                           << combination_mode << "'");
  }
};

enum class OutputMode { kBilingual, kMonoA, kMonoB, kLidCombined };

inline OutputMode parse_output_mode(const std::string &s) {
  if (s == "bilingual") return OutputMode::kBilingual;
  if (s == "mono-a") return OutputMode::kMonoA;
  if (s == "mono-b") return OutputMode::kMonoB;
  if (s == "lid-combined") return OutputMode::kLidCombined;
  throw ConfigError("unknown output mode '" + s +
                    "' (expected bilingual, mono-a, mono-b, lid-combined)");
}

inline std::string output_mode_name(OutputMode m) {
  switch (m) {
    case OutputMode::kBilingual:
      return "bilingual";
    case OutputMode::kMonoA:
      return "mono-a";
    case OutputMode::kMonoB:
      return "mono-b";
    case OutputMode::kLidCombined:
      return "lid-combined";
  }
  throw InvariantError("unreachable output mode");
}

/// Everything the whole-utterance no-grad forward computes.
struct ForwardOutput {
  Tensor logp_bilingual;  // [T x bilingual units], shared projection
  Tensor logp_mono_a;     // [T x locale-a units]
  Tensor logp_mono_b;     // [T x locale-b units]
  Tensor logp_combined;   // [T x bilingual units], soft-combined path
  Tensor lid_probs;       // [T x 3] (locale-a, locale-b, SIL)
  Tensor pe_a;            // [T x model_dim], after trailing layer norm
  Tensor pe_b;            // [T x model_dim]
};

/// Per-stack key/value history for streaming. Chunks fed in sequence give
/// bit-identical outputs to a whole-utterance forward.
struct StreamState {
  struct LayerKV {
    std::vector<double> k, v;  // frames x model_dim, appended per frame
  };
  std::size_t frames = 0;
  std::vector<LayerKV> shared, pe_a, pe_b, lid;
};

class AcousticModel {
 public:
  ModelConfig config;
  BilingualSpaceMap space;
  ParameterStore store;

  AcousticModel(ModelConfig cfg, BilingualSpaceMap space_map, Rng &rng)
      : config(std::move(cfg)), space(std::move(space_map)) {
    config.validate();
    create_params(rng);
    build_refs();
  }

  std::size_t out_width(OutputMode mode) const {
    switch (mode) {
      case OutputMode::kBilingual:
      case OutputMode::kLidCombined:
        return space.bilingual.size();
      case OutputMode::kMonoA:
        return space.space_a.size();
      case OutputMode::kMonoB:
        return space.space_b.size();
    }
    throw InvariantError("unreachable output mode");
  }

  // -------------------------------------------------------------------
  // Tape (training) path
  // -------------------------------------------------------------------

  /// Shared encoder over a whole utterance: input projection + positions,
  /// then the shared stack under the causal streaming mask.
  Node *forward_shared(Tape &tape, const Tensor &features) {
    BLXAM_CHECK(features.rank() == 2 && features.cols() == config.feature_dim,
                "forward_shared: features " << features.shape_str()
                                            << " but feature_dim is "
                                            << config.feature_dim);
    const std::size_t t_len = features.rows(), d = config.model_dim;
    Tensor pos({t_len, d});
    for (std::size_t t = 0; t < t_len; ++t)
      kernels::posenc_row(t, d, pos.v.data() + t * d);
    Node *x = ops::add(
        tape,
        ops::add_row_broadcast(tape,
                               ops::matmul(tape, tape.leaf(features),
                                           store.node(tape, "in.w")),
                               store.node(tape, "in.b")),
        tape.leaf(std::move(pos)));
    for (std::size_t i = 0; i < config.n_shared_layers; ++i)
      x = layer_t(tape, layer_prefix("shared", i), x);
    return x;
  }

  /// One locale's parallel-encoder stack plus its trailing layer norm.
  Node *forward_pe(Tape &tape, const std::string &locale, Node *hidden) {
    const std::string stack = pe_stack_for(locale);
    Node *x = hidden;
    for (std::size_t i = 0; i < config.n_pe_layers; ++i)
      x = layer_t(tape, layer_prefix(stack, i), x);
    return ops::layer_norm(tape, x, store.node(tape, stack + ".out_ln.g"),
                           store.node(tape, stack + ".out_ln.b"), kLnEps);
  }

  struct LidNodes {
    Node *logits;  // [T x 3]
    Node *probs;   // [T x 3]
  };

  /// LID head over the shared-stack output: its own transformer layers,
  /// trailing norm, linear to {locale-a, locale-b, SIL}, softmax.
  LidNodes lid_forward(Tape &tape, Node *hidden) {
    Node *x = hidden;
    for (std::size_t i = 0; i < config.n_lid_layers; ++i)
      x = layer_t(tape, layer_prefix("lid", i), x);
    x = ops::layer_norm(tape, x, store.node(tape, "lid.out_ln.g"),
                        store.node(tape, "lid.out_ln.b"), kLnEps);
    Node *logits = ops::add_row_broadcast(
        tape, ops::matmul(tape, x, store.node(tape, "lid.proj.w")),
        store.node(tape, "lid.proj.b"));
    return {logits, ops::softmax(tape, logits, 1)};
  }

  /// Shared bilingual projection over concat(hA, hB), log-softmaxed.
  Node *project_bilingual(Tape &tape, Node *ha, Node *hb) {
    Node *cat = ops::concat_cols(tape, ha, hb);
    return ops::log_softmax_rows(
        tape, ops::add_row_broadcast(
                  tape, ops::matmul(tape, cat,
                                    store.node(tape, "head_bilingual.w")),
                  store.node(tape, "head_bilingual.b")));
  }

  /// Per-locale projection head (target space includes SIL and FOREIGN).
  Node *project_monolingual(Tape &tape, const std::string &locale, Node *h) {
    const std::string head =
        pe_stack_for(locale) == "pe_a" ? "head_a" : "head_b";
    return ops::log_softmax_rows(
        tape,
        ops::add_row_broadcast(tape,
                               ops::matmul(tape, h,
                                           store.node(tape, head + ".w")),
                               store.node(tape, head + ".b")));
  }

  /// Output head over the sil-renormalized soft combination.
  Node *project_lid_combined(Tape &tape, Node *combined) {
    return ops::log_softmax_rows(
        tape, ops::add_row_broadcast(
                  tape, ops::matmul(tape, combined,
                                    store.node(tape, "head_combined.w")),
                  store.node(tape, "head_combined.b")));
  }

  // -------------------------------------------------------------------
  // Streaming (no-grad) path
  // -------------------------------------------------------------------

  StreamState new_stream() const {
    StreamState st;
    st.shared.resize(config.n_shared_layers);
    st.pe_a.resize(config.n_pe_layers);
    st.pe_b.resize(config.n_pe_layers);
    st.lid.resize(config.n_lid_layers);
    return st;
  }

  static constexpr std::size_t kNextFrame = static_cast<std::size_t>(-1);

  /// Feed the next chunk (at most chunk_frames rows) and get this chunk's
  /// posteriors for `mode`. Pass start_frame to assert where the chunk
  /// belongs; feeding a chunk that does not start at the next unseen frame
  /// is rejected.
  Tensor streaming_forward(const Tensor &chunk, StreamState &state,
                           OutputMode mode,
                           std::size_t start_frame = kNextFrame) const {
    BLXAM_CHECK(chunk.rank() == 2 && chunk.cols() == config.feature_dim,
                "streaming_forward: chunk " << chunk.shape_str()
                                            << " but feature_dim is "
                                            << config.feature_dim);
    BLXAM_CHECK(chunk.rows() <= config.chunk_frames,
                "streaming_forward: chunk of "
                    << chunk.rows() << " frames exceeds chunk_frames="
                    << config.chunk_frames);
    BLXAM_CHECK(start_frame == kNextFrame || start_frame == state.frames,
                "streaming_forward: chunk out of order, expected start frame "
                    << state.frames << ", got " << start_frame);
    const std::size_t n = out_width(mode);
    Tensor out({chunk.rows(), n});
    Workspace ws = make_workspace();
    for (std::size_t r = 0; r < chunk.rows(); ++r) {
      advance_frame(state, chunk.row(r), ws);
      const double *src = nullptr;
      switch (mode) {
        case OutputMode::kBilingual:
          src = ws.logp_bi.data();
          break;
        case OutputMode::kMonoA:
          src = ws.logp_a.data();
          break;
        case OutputMode::kMonoB:
          src = ws.logp_b.data();
          break;
        case OutputMode::kLidCombined:
          src = ws.logp_comb.data();
          break;
      }
      std::memcpy(out.row(r), src, n * sizeof(double));
    }
    return out;
  }

  /// Feed the next chunk (at most chunk_frames rows) and get every output
  /// path for its rows. Same state/ordering contract as streaming_forward.
  ForwardOutput streaming_forward_all(
      const Tensor &chunk, StreamState &state,
      std::size_t start_frame = kNextFrame) const {
    BLXAM_CHECK(chunk.rank() == 2 && chunk.cols() == config.feature_dim,
                "streaming_forward: chunk " << chunk.shape_str()
                                            << " but feature_dim is "
                                            << config.feature_dim);
    BLXAM_CHECK(chunk.rows() <= config.chunk_frames,
                "streaming_forward: chunk of "
                    << chunk.rows() << " frames exceeds chunk_frames="
                    << config.chunk_frames);
    BLXAM_CHECK(start_frame == kNextFrame || start_frame == state.frames,
                "streaming_forward: chunk out of order, expected start frame "
                    << state.frames << ", got " << start_frame);
    const std::size_t t_len = chunk.rows(), d = config.model_dim;
    ForwardOutput fo;
    fo.logp_bilingual = Tensor({t_len, space.bilingual.size()});
    fo.logp_mono_a = Tensor({t_len, space.space_a.size()});
    fo.logp_mono_b = Tensor({t_len, space.space_b.size()});
    fo.logp_combined = Tensor({t_len, space.bilingual.size()});
    fo.lid_probs = Tensor({t_len, 3});
    fo.pe_a = Tensor({t_len, d});
    fo.pe_b = Tensor({t_len, d});
    Workspace ws = make_workspace();
    for (std::size_t t = 0; t < t_len; ++t) {
      advance_frame(state, chunk.row(t), ws);
      std::memcpy(fo.logp_bilingual.row(t), ws.logp_bi.data(),
                  ws.logp_bi.size() * sizeof(double));
      std::memcpy(fo.logp_mono_a.row(t), ws.logp_a.data(),
                  ws.logp_a.size() * sizeof(double));
      std::memcpy(fo.logp_mono_b.row(t), ws.logp_b.data(),
                  ws.logp_b.size() * sizeof(double));
      std::memcpy(fo.logp_combined.row(t), ws.logp_comb.data(),
                  ws.logp_comb.size() * sizeof(double));
      std::memcpy(fo.lid_probs.row(t), ws.lid3.data(), 3 * sizeof(double));
      std::memcpy(fo.pe_a.row(t), ws.ha_ln.data(), d * sizeof(double));
      std::memcpy(fo.pe_b.row(t), ws.hb_ln.data(), d * sizeof(double));
    }
    return fo;
  }

  /// Whole-utterance no-grad forward computing every output path.
  ForwardOutput forward_all(const Tensor &features) const {
    BLXAM_CHECK(features.rank() == 2 && features.cols() == config.feature_dim,
                "forward_all: features " << features.shape_str()
                                         << " but feature_dim is "
                                         << config.feature_dim);
    const std::size_t t_len = features.rows(), d = config.model_dim;
    ForwardOutput fo;
    fo.logp_bilingual = Tensor({t_len, space.bilingual.size()});
    fo.logp_mono_a = Tensor({t_len, space.space_a.size()});
    fo.logp_mono_b = Tensor({t_len, space.space_b.size()});
    fo.logp_combined = Tensor({t_len, space.bilingual.size()});
    fo.lid_probs = Tensor({t_len, 3});
    fo.pe_a = Tensor({t_len, d});
    fo.pe_b = Tensor({t_len, d});
    StreamState st = new_stream();
    Workspace ws = make_workspace();
    for (std::size_t t = 0; t < t_len; ++t) {
      advance_frame(st, features.row(t), ws);
      std::memcpy(fo.logp_bilingual.row(t), ws.logp_bi.data(),
                  ws.logp_bi.size() * sizeof(double));
      std::memcpy(fo.logp_mono_a.row(t), ws.logp_a.data(),
                  ws.logp_a.size() * sizeof(double));
      std::memcpy(fo.logp_mono_b.row(t), ws.logp_b.data(),
                  ws.logp_b.size() * sizeof(double));
      std::memcpy(fo.logp_combined.row(t), ws.logp_comb.data(),
                  ws.logp_comb.size() * sizeof(double));
      std::memcpy(fo.lid_probs.row(t), ws.lid3.data(), 3 * sizeof(double));
      std::memcpy(fo.pe_a.row(t), ws.ha_ln.data(), d * sizeof(double));
      std::memcpy(fo.pe_b.row(t), ws.hb_ln.data(), d * sizeof(double));
    }
    return fo;
  }

  // -------------------------------------------------------------------
  // Persistence
  // -------------------------------------------------------------------

  /// Writes <prefix>.ckpt (parameters + optimizer state), <prefix>.space
  /// (the bilingual space map), and <prefix>.meta (config + file
  /// references, basenames resolved against the meta file's directory).
  void save(const std::string &prefix) const {
    save_checkpoint(prefix + ".ckpt", store);
    save_space_map(prefix + ".space", space);
    std::ostringstream os;
    os << "blxam-model\tv1\n";
    os << "feature_dim\t" << config.feature_dim << '\n';
    os << "model_dim\t" << config.model_dim << '\n';
    os << "heads\t" << config.heads << '\n';
    os << "ff_dim\t" << config.ff_dim << '\n';
    os << "n_shared_layers\t" << config.n_shared_layers << '\n';
    os << "n_pe_layers\t" << config.n_pe_layers << '\n';
    os << "n_lid_layers\t" << config.n_lid_layers << '\n';
    os << "chunk_frames\t" << config.chunk_frames << '\n';
    os << "left_context_frames\t";
    if (config.left_context_frames == ops::kUnlimitedContext)
      os << "unlimited";
    else
      os << config.left_context_frames;
    os << '\n';
    os << "locale_a\t" << config.locale_a << '\n';
    os << "locale_b\t" << config.locale_b << '\n';
    os << "combination_mode\t" << config.combination_mode << '\n';
    os << "checkpoint\t" << base_name(prefix) << ".ckpt\n";
    os << "space_map\t" << base_name(prefix) << ".space\n";
    atomic_write_text(prefix + ".meta", os.str());
  }

  static AcousticModel load(const std::string &prefix) {
    const std::string meta_path = prefix + ".meta";
    std::istringstream in(read_text_file(meta_path));
    std::string line;
    BLXAM_DATA_CHECK(std::getline(in, line) && line == "blxam-model\tv1",
                     "'" << meta_path << "' is not a model description");
    std::map<std::string, std::string> kv;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const std::size_t tab = line.find('\t');
      BLXAM_DATA_CHECK(tab != std::string::npos,
                       meta_path << ": malformed line '" << line << "'");
      kv[line.substr(0, tab)] = line.substr(tab + 1);
    }
    auto need = [&](const std::string &key) {
      auto it = kv.find(key);
      BLXAM_DATA_CHECK(it != kv.end(), meta_path << ": missing key '" << key
                                                 << "'");
      return it->second;
    };
    auto num = [&](const std::string &key) -> std::size_t {
      try {
        return std::stoull(need(key));
      } catch (const std::exception &) {
        throw DataError(meta_path + ": bad number for '" + key + "'");
      }
    };
    ModelConfig cfg;
    cfg.feature_dim = num("feature_dim");
    cfg.model_dim = num("model_dim");
    cfg.heads = num("heads");
    cfg.ff_dim = num("ff_dim");
    cfg.n_shared_layers = num("n_shared_layers");
    cfg.n_pe_layers = num("n_pe_layers");
    cfg.n_lid_layers = num("n_lid_layers");
    cfg.chunk_frames = num("chunk_frames");
    cfg.left_context_frames = need("left_context_frames") == "unlimited"
                                  ? ops::kUnlimitedContext
                                  : num("left_context_frames");
    cfg.locale_a = need("locale_a");
    cfg.locale_b = need("locale_b");
    cfg.combination_mode = need("combination_mode");

    const std::string dir = dir_name(meta_path);
    BilingualSpaceMap sp = load_space_map(dir + "/" + need("space_map"));
    Rng throwaway(0);
    AcousticModel model(cfg, std::move(sp), throwaway);

    ParameterStore file_store;
    load_checkpoint(dir + "/" + need("checkpoint"), file_store);
    for (auto &[name, p] : model.store.params()) {
      BLXAM_DATA_CHECK(file_store.has(name),
                       "checkpoint is missing parameter '" << name << "'");
      Param &f = file_store.get(name);
      BLXAM_DATA_CHECK(f.value.shape == p.value.shape,
                       "checkpoint parameter '"
                           << name << "' has shape " << f.value.shape_str()
                           << ", model expects " << p.value.shape_str());
      p.value = f.value;
      p.m = f.m;
      p.v = f.v;
      p.step = f.step;
    }
    BLXAM_DATA_CHECK(
        file_store.params().size() == model.store.params().size(),
        "checkpoint carries " << file_store.params().size()
                              << " parameters, model expects "
                              << model.store.params().size());
    return model;
  }

 private:
  // -------------------------------------------------------------------
  // Parameters
  // -------------------------------------------------------------------

  static std::string layer_prefix(const std::string &stack, std::size_t i) {
    return stack + "." + std::to_string(i) + ".";
  }

  std::string pe_stack_for(const std::string &locale) const {
    if (locale == config.locale_a) return "pe_a";
    if (locale == config.locale_b) return "pe_b";
    throw Error("unknown locale '" + locale + "' (model has '" +
                config.locale_a + "' and '" + config.locale_b + "')");
  }

  void create_layer_params(Rng &rng, const std::string &pf) {
    const std::size_t d = config.model_dim, ff = config.ff_dim;
    Tensor ones({d});
    ones.fill(1.0);
    store.create(pf + "ln1.g", ones);
    store.create(pf + "ln1.b", Tensor({d}));
    store.create(pf + "att.wq", glorot_uniform(rng, d, d));
    store.create(pf + "att.bq", Tensor({d}));
    store.create(pf + "att.wk", glorot_uniform(rng, d, d));
    store.create(pf + "att.bk", Tensor({d}));
    store.create(pf + "att.wv", glorot_uniform(rng, d, d));
    store.create(pf + "att.bv", Tensor({d}));
    store.create(pf + "att.wo", glorot_uniform(rng, d, d));
    store.create(pf + "att.bo", Tensor({d}));
    store.create(pf + "ln2.g", ones);
    store.create(pf + "ln2.b", Tensor({d}));
    store.create(pf + "ff.w1", glorot_uniform(rng, d, ff));
    store.create(pf + "ff.b1", Tensor({ff}));
    store.create(pf + "ff.w2", glorot_uniform(rng, ff, d));
    store.create(pf + "ff.b2", Tensor({d}));
  }

  void create_params(Rng &rng) {
    const std::size_t d = config.model_dim;
    Tensor ones({d});
    ones.fill(1.0);
    store.create("in.w", glorot_uniform(rng, config.feature_dim, d));
    store.create("in.b", Tensor({d}));
    for (std::size_t i = 0; i < config.n_shared_layers; ++i)
      create_layer_params(rng, layer_prefix("shared", i));
    for (std::size_t i = 0; i < config.n_pe_layers; ++i)
      create_layer_params(rng, layer_prefix("pe_a", i));
    store.create("pe_a.out_ln.g", ones);
    store.create("pe_a.out_ln.b", Tensor({d}));
    for (std::size_t i = 0; i < config.n_pe_layers; ++i)
      create_layer_params(rng, layer_prefix("pe_b", i));
    store.create("pe_b.out_ln.g", ones);
    store.create("pe_b.out_ln.b", Tensor({d}));
    for (std::size_t i = 0; i < config.n_lid_layers; ++i)
      create_layer_params(rng, layer_prefix("lid", i));
    store.create("lid.out_ln.g", ones);
    store.create("lid.out_ln.b", Tensor({d}));
    store.create("lid.proj.w", glorot_uniform(rng, d, 3));
    store.create("lid.proj.b", Tensor({3}));
    store.create("head_a.w", glorot_uniform(rng, d, space.space_a.size()));
    store.create("head_a.b", Tensor({space.space_a.size()}));
    store.create("head_b.w", glorot_uniform(rng, d, space.space_b.size()));
    store.create("head_b.b", Tensor({space.space_b.size()}));
    store.create("head_bilingual.w",
                 glorot_uniform(rng, 2 * d, space.bilingual.size()));
    store.create("head_bilingual.b", Tensor({space.bilingual.size()}));
    store.create("head_combined.w",
                 glorot_uniform(rng, d, space.bilingual.size()));
    store.create("head_combined.b", Tensor({space.bilingual.size()}));
  }

  /// One pre-norm Transformer layer on the tape.
  Node *layer_t(Tape &tape, const std::string &pf, Node *x) {
    Node *ln1 = ops::layer_norm(tape, x, store.node(tape, pf + "ln1.g"),
                                store.node(tape, pf + "ln1.b"), kLnEps);
    Node *q = ops::add_row_broadcast(
        tape, ops::matmul(tape, ln1, store.node(tape, pf + "att.wq")),
        store.node(tape, pf + "att.bq"));
    Node *k = ops::add_row_broadcast(
        tape, ops::matmul(tape, ln1, store.node(tape, pf + "att.wk")),
        store.node(tape, pf + "att.bk"));
    Node *v = ops::add_row_broadcast(
        tape, ops::matmul(tape, ln1, store.node(tape, pf + "att.wv")),
        store.node(tape, pf + "att.bv"));
    Node *att = ops::causal_attention(tape, q, k, v, config.heads,
                                      config.left_context_frames);
    Node *proj = ops::add_row_broadcast(
        tape, ops::matmul(tape, att, store.node(tape, pf + "att.wo")),
        store.node(tape, pf + "att.bo"));
    Node *a = ops::add(tape, x, proj);
    Node *ln2 = ops::layer_norm(tape, a, store.node(tape, pf + "ln2.g"),
                                store.node(tape, pf + "ln2.b"), kLnEps);
    Node *f1 = ops::add_row_broadcast(
        tape, ops::matmul(tape, ln2, store.node(tape, pf + "ff.w1")),
        store.node(tape, pf + "ff.b1"));
    Node *g = ops::gelu(tape, f1);
    Node *f2 = ops::add_row_broadcast(
        tape, ops::matmul(tape, g, store.node(tape, pf + "ff.w2")),
        store.node(tape, pf + "ff.b2"));
    return ops::add(tape, a, f2);
  }

  // -------------------------------------------------------------------
  // Streaming internals
  // -------------------------------------------------------------------

  struct LayerRef {
    const Param *ln1g, *ln1b;
    const Param *wq, *bq, *wk, *bk, *wv, *bv, *wo, *bo;
    const Param *ln2g, *ln2b;
    const Param *w1, *b1, *w2, *b2;
  };

  std::vector<LayerRef> refs_shared_, refs_pe_a_, refs_pe_b_, refs_lid_;
  const Param *in_w_ = nullptr, *in_b_ = nullptr;
  const Param *pe_a_lng_ = nullptr, *pe_a_lnb_ = nullptr;
  const Param *pe_b_lng_ = nullptr, *pe_b_lnb_ = nullptr;
  const Param *lid_lng_ = nullptr, *lid_lnb_ = nullptr;
  const Param *lid_w_ = nullptr, *lid_b_ = nullptr;
  const Param *ha_w_ = nullptr, *ha_b_ = nullptr;
  const Param *hb_w_ = nullptr, *hb_b_ = nullptr;
  const Param *bi_w_ = nullptr, *bi_b_ = nullptr;
  const Param *comb_w_ = nullptr, *comb_b_ = nullptr;

  LayerRef make_ref(const std::string &pf) const {
    const ParameterStore &s = store;
    return LayerRef{&s.get(pf + "ln1.g"),  &s.get(pf + "ln1.b"),
                    &s.get(pf + "att.wq"), &s.get(pf + "att.bq"),
                    &s.get(pf + "att.wk"), &s.get(pf + "att.bk"),
                    &s.get(pf + "att.wv"), &s.get(pf + "att.bv"),
                    &s.get(pf + "att.wo"), &s.get(pf + "att.bo"),
                    &s.get(pf + "ln2.g"),  &s.get(pf + "ln2.b"),
                    &s.get(pf + "ff.w1"),  &s.get(pf + "ff.b1"),
                    &s.get(pf + "ff.w2"),  &s.get(pf + "ff.b2")};
  }

  void build_refs() {
    for (std::size_t i = 0; i < config.n_shared_layers; ++i)
      refs_shared_.push_back(make_ref(layer_prefix("shared", i)));
    for (std::size_t i = 0; i < config.n_pe_layers; ++i)
      refs_pe_a_.push_back(make_ref(layer_prefix("pe_a", i)));
    for (std::size_t i = 0; i < config.n_pe_layers; ++i)
      refs_pe_b_.push_back(make_ref(layer_prefix("pe_b", i)));
    for (std::size_t i = 0; i < config.n_lid_layers; ++i)
      refs_lid_.push_back(make_ref(layer_prefix("lid", i)));
    in_w_ = &store.get("in.w");
    in_b_ = &store.get("in.b");
    pe_a_lng_ = &store.get("pe_a.out_ln.g");
    pe_a_lnb_ = &store.get("pe_a.out_ln.b");
    pe_b_lng_ = &store.get("pe_b.out_ln.g");
    pe_b_lnb_ = &store.get("pe_b.out_ln.b");
    lid_lng_ = &store.get("lid.out_ln.g");
    lid_lnb_ = &store.get("lid.out_ln.b");
    lid_w_ = &store.get("lid.proj.w");
    lid_b_ = &store.get("lid.proj.b");
    ha_w_ = &store.get("head_a.w");
    ha_b_ = &store.get("head_a.b");
    hb_w_ = &store.get("head_b.w");
    hb_b_ = &store.get("head_b.b");
    bi_w_ = &store.get("head_bilingual.w");
    bi_b_ = &store.get("head_bilingual.b");
    comb_w_ = &store.get("head_combined.w");
    comb_b_ = &store.get("head_combined.b");
  }

  struct Workspace {
    std::vector<double> x, ln, q, k, v, att, proj, a, f1, f2;
    std::vector<double> ha, hb, lidh, ha_ln, hb_ln, lid_ln, cat, comb;
    std::vector<double> lid3, logp_bi, logp_a, logp_b, logp_comb, span;
  };

  Workspace make_workspace() const {
    const std::size_t d = config.model_dim;
    Workspace ws;
    ws.x.resize(d);
    ws.ln.resize(d);
    ws.q.resize(d);
    ws.k.resize(d);
    ws.v.resize(d);
    ws.att.resize(d);
    ws.proj.resize(d);
    ws.a.resize(d);
    ws.f1.resize(config.ff_dim);
    ws.f2.resize(d);
    ws.ha.resize(d);
    ws.hb.resize(d);
    ws.lidh.resize(d);
    ws.ha_ln.resize(d);
    ws.hb_ln.resize(d);
    ws.lid_ln.resize(d);
    ws.cat.resize(2 * d);
    ws.comb.resize(d);
    ws.lid3.resize(3);
    ws.logp_bi.resize(space.bilingual.size());
    ws.logp_a.resize(space.space_a.size());
    ws.logp_b.resize(space.space_b.size());
    ws.logp_comb.resize(space.bilingual.size());
    return ws;
  }

  /// y = x * W + b for one row; same arithmetic as matmul followed by
  /// add_row_broadcast on the tape path.
  static void linear_row(const double *x, const Param &w, const Param &b,
                         std::size_t k, std::size_t n, double *y) {
    std::fill(y, y + n, 0.0);
    kernels::matmul_acc(x, 1, k, w.value.v.data(), n, y);
    for (std::size_t j = 0; j < n; ++j) y[j] += b.value.v[j];
  }

  /// One frame through one stack, in place over x. Mirrors layer_t.
  void stack_row(const std::vector<LayerRef> &layers,
                 std::vector<StreamState::LayerKV> &kv, std::size_t t,
                 double *x, Workspace &ws) const {
    const std::size_t d = config.model_dim, ff = config.ff_dim;
    const std::size_t left = config.left_context_frames;
    const std::size_t lo =
        (left == ops::kUnlimitedContext || t <= left) ? 0 : t - left;
    ws.span.resize(t - lo + 1);
    for (std::size_t li = 0; li < layers.size(); ++li) {
      const LayerRef &L = layers[li];
      StreamState::LayerKV &c = kv[li];
      kernels::layer_norm_row(x, d, L.ln1g->value.v.data(),
                              L.ln1b->value.v.data(), kLnEps, ws.ln.data());
      linear_row(ws.ln.data(), *L.wq, *L.bq, d, d, ws.q.data());
      linear_row(ws.ln.data(), *L.wk, *L.bk, d, d, ws.k.data());
      linear_row(ws.ln.data(), *L.wv, *L.bv, d, d, ws.v.data());
      c.k.insert(c.k.end(), ws.k.begin(), ws.k.end());
      c.v.insert(c.v.end(), ws.v.begin(), ws.v.end());
      kernels::attend_row(ws.q.data(), c.k.data(), c.v.data(), lo, t,
                          config.heads, d, ws.att.data(), ws.span.data());
      linear_row(ws.att.data(), *L.wo, *L.bo, d, d, ws.proj.data());
      for (std::size_t i = 0; i < d; ++i) ws.a[i] = x[i] + ws.proj[i];
      kernels::layer_norm_row(ws.a.data(), d, L.ln2g->value.v.data(),
                              L.ln2b->value.v.data(), kLnEps, ws.ln.data());
      linear_row(ws.ln.data(), *L.w1, *L.b1, d, ff, ws.f1.data());
      kernels::gelu(ws.f1.data(), ff, ws.f1.data());
      linear_row(ws.f1.data(), *L.w2, *L.b2, ff, d, ws.f2.data());
      for (std::size_t i = 0; i < d; ++i) x[i] = ws.a[i] + ws.f2[i];
    }
  }

  /// One frame through the whole model; fills every ws output buffer and
  /// appends to the caches. Mirrors the tape path exactly.
  void advance_frame(StreamState &st, const double *feat,
                     Workspace &ws) const {
    const std::size_t d = config.model_dim;
    const std::size_t t = st.frames;
    // Input projection + position.
    linear_row(feat, *in_w_, *in_b_, config.feature_dim, d, ws.x.data());
    std::vector<double> pos(d);
    kernels::posenc_row(t, d, pos.data());
    for (std::size_t i = 0; i < d; ++i) ws.x[i] += pos[i];
    // Shared stack, then fan out.
    stack_row(refs_shared_, st.shared, t, ws.x.data(), ws);
    std::copy(ws.x.begin(), ws.x.end(), ws.ha.begin());
    std::copy(ws.x.begin(), ws.x.end(), ws.hb.begin());
    std::copy(ws.x.begin(), ws.x.end(), ws.lidh.begin());
    stack_row(refs_pe_a_, st.pe_a, t, ws.ha.data(), ws);
    stack_row(refs_pe_b_, st.pe_b, t, ws.hb.data(), ws);
    stack_row(refs_lid_, st.lid, t, ws.lidh.data(), ws);
    kernels::layer_norm_row(ws.ha.data(), d, pe_a_lng_->value.v.data(),
                            pe_a_lnb_->value.v.data(), kLnEps,
                            ws.ha_ln.data());
    kernels::layer_norm_row(ws.hb.data(), d, pe_b_lng_->value.v.data(),
                            pe_b_lnb_->value.v.data(), kLnEps,
                            ws.hb_ln.data());
    kernels::layer_norm_row(ws.lidh.data(), d, lid_lng_->value.v.data(),
                            lid_lnb_->value.v.data(), kLnEps,
                            ws.lid_ln.data());
    // LID probabilities.
    linear_row(ws.lid_ln.data(), *lid_w_, *lid_b_, d, 3, ws.lid3.data());
    kernels::softmax_row(ws.lid3.data(), 3);
    // Per-locale heads.
    std::vector<double> logits(ws.logp_a.size());
    linear_row(ws.ha_ln.data(), *ha_w_, *ha_b_, d, ws.logp_a.size(),
               logits.data());
    kernels::log_softmax_row(logits.data(), ws.logp_a.size(),
                             ws.logp_a.data());
    logits.resize(ws.logp_b.size());
    linear_row(ws.hb_ln.data(), *hb_w_, *hb_b_, d, ws.logp_b.size(),
               logits.data());
    kernels::log_softmax_row(logits.data(), ws.logp_b.size(),
                             ws.logp_b.data());
    // Shared bilingual projection over the concatenation.
    std::copy(ws.ha_ln.begin(), ws.ha_ln.end(), ws.cat.begin());
    std::copy(ws.hb_ln.begin(), ws.hb_ln.end(), ws.cat.begin() + d);
    logits.resize(ws.logp_bi.size());
    linear_row(ws.cat.data(), *bi_w_, *bi_b_, 2 * d, ws.logp_bi.size(),
               logits.data());
    kernels::log_softmax_row(logits.data(), ws.logp_bi.size(),
                             ws.logp_bi.data());
    // Soft combination and its head.
    kernels::combine_row(ws.ha_ln.data(), ws.hb_ln.data(), ws.lid3[0],
                         ws.lid3[1], d, ws.comb.data());
    logits.resize(ws.logp_comb.size());
    linear_row(ws.comb.data(), *comb_w_, *comb_b_, d, ws.logp_comb.size(),
               logits.data());
    kernels::log_softmax_row(logits.data(), ws.logp_comb.size(),
                             ws.logp_comb.data());
    st.frames = t + 1;
  }
};

}  // namespace blxam

#endif  // BLXAM_MODEL_HPP_
