// blxam/training.hpp

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

#ifndef BLXAM_TRAINING_HPP_
#define BLXAM_TRAINING_HPP_

// Frame-target construction, the three loss functions, staged training
// (bilingual pretrain with hard locale routing, LID finetune, single-stage
// aux-joint), and epoch logging.
//
// Batching note: a batch is a set of whole utterances. Instead of padding
// to a common length and masking, each utterance contributes its own
// cross-entropy node weighted by its frame share T_u / T_batch; the batch
// loss is therefore the exact frame-pooled mean a padded-and-masked batch
// would produce, with no pad frames anywhere.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "blxam/error.hpp"
#include "blxam/fileio.hpp"
#include "blxam/model.hpp"
#include "blxam/ops.hpp"
#include "blxam/param_store.hpp"
#include "blxam/rng.hpp"
#include "blxam/synthdata.hpp"
#include "blxam/tape.hpp"
#include "blxam/tensor.hpp"

namespace blxam {

// ---------------------------------------------------------------------
// Frame targets
// ---------------------------------------------------------------------

/// Per-frame training targets, one id stream per output head. Ids are
/// indices into the bilingual inventory, the two per-locale inventories
/// (FOREIGN on other-locale speech, SIL on silence), and the 3-way LID
/// classes {0: locale-a, 1: locale-b, 2: silence}.
struct FrameTargets {
  std::vector<int> bilingual;
  std::vector<int> mono_a;
  std::vector<int> mono_b;
  std::vector<int> lid;
};

inline constexpr int kSilId = 0;      // SIL in every inventory
inline constexpr int kForeignId = 1;  // FOREIGN in per-locale inventories
inline constexpr int kLidSil = 2;     // silence class of the LID stream

inline FrameTargets make_frame_targets(const Utterance &u,
                                       const BilingualSpaceMap &map) {
  BLXAM_DATA_CHECK(u.alignment.size() == u.frames(),
                   "utterance '" << u.id << "': " << u.alignment.size()
                                 << " alignment ids for " << u.frames()
                                 << " frames");
  u.validate();
  FrameTargets t;
  t.bilingual = u.alignment;
  t.lid = lid_target_stream(u, map.locale_a, map.locale_b);
  t.mono_a.resize(u.frames());
  t.mono_b.resize(u.frames());
  for (std::size_t f = 0; f < u.frames(); ++f) {
    const int bid = t.bilingual[f];
    BLXAM_DATA_CHECK(bid >= 0 &&
                         static_cast<std::size_t>(bid) < map.bilingual.size(),
                     "utterance '" << u.id << "': bilingual id " << bid
                                   << " out of range [0, "
                                   << map.bilingual.size() << ") at frame "
                                   << f);
    if (bid == kSilId) {  // silence: SIL everywhere (validate() guarantees
      t.mono_a[f] = kSilId;  // the frame lies outside every word span)
      t.mono_b[f] = kSilId;
      continue;
    }
    // Speech: the word's own locale sees the unit, the other sees FOREIGN.
    if (t.lid[f] == 0) {
      t.mono_a[f] = map.map_a[static_cast<std::size_t>(bid)];
      t.mono_b[f] = kForeignId;
      BLXAM_DATA_CHECK(t.mono_a[f] != kForeignId,
                       "utterance '" << u.id << "': frame " << f
                                     << " tagged " << map.locale_a
                                     << " but unit '"
                                     << map.bilingual.units[static_cast<std::size_t>(bid)]
                                     << "' is not in that inventory");
    } else {
      t.mono_a[f] = kForeignId;
      t.mono_b[f] = map.map_b[static_cast<std::size_t>(bid)];
      BLXAM_DATA_CHECK(t.mono_b[f] != kForeignId,
                       "utterance '" << u.id << "': frame " << f
                                     << " tagged " << map.locale_b
                                     << " but unit '"
                                     << map.bilingual.units[static_cast<std::size_t>(bid)]
                                     << "' is not in that inventory");
    }
  }
  return t;
}

// ---------------------------------------------------------------------
// Loss functions over evaluated outputs
// ---------------------------------------------------------------------

namespace train_detail {

/// Mean per-frame cross entropy from a [T x K] log-probability matrix.
inline double mean_ce_logp(const Tensor &logp, const std::vector<int> &ids,
                           const char *what) {
  BLXAM_DATA_CHECK(logp.rank() == 2,
                   what << ": expected matrix, got " << logp.shape_str());
  BLXAM_DATA_CHECK(ids.size() == logp.rows(),
                   what << ": " << ids.size() << " targets for " << logp.rows()
                        << " frames");
  const std::size_t n = logp.cols();
  double sum = 0.0;
  for (std::size_t f = 0; f < ids.size(); ++f) {
    BLXAM_DATA_CHECK(ids[f] >= 0 && static_cast<std::size_t>(ids[f]) < n,
                     what << ": target " << ids[f] << " out of range [0, " << n
                          << ") at frame " << f);
    sum -= logp.at(f, static_cast<std::size_t>(ids[f]));
  }
  return sum / static_cast<double>(ids.size());
}

/// Frames whose arg-max class matches the target id.
inline std::size_t frames_correct(const Tensor &scores,
                                  const std::vector<int> &ids) {
  std::size_t correct = 0;
  for (std::size_t f = 0; f < ids.size(); ++f) {
    const double *row = scores.row(f);
    std::size_t best = 0;
    for (std::size_t c = 1; c < scores.cols(); ++c)
      if (row[c] > row[best]) best = c;
    if (best == static_cast<std::size_t>(ids[f])) ++correct;
  }
  return correct;
}

}  // namespace train_detail

struct TrainingPlan;  // forward declaration for loss_aux

/// Mean frame cross entropy of the shared bilingual head.
inline double loss_bilingual(const ForwardOutput &out, const FrameTargets &t) {
  return train_detail::mean_ce_logp(out.logp_bilingual, t.bilingual,
                                    "loss_bilingual");
}

/// Mean frame cross entropy of the 3-way LID stream. The caller applies
/// the plan's lid_loss_weight; this is the bare component.
inline double loss_lid(const ForwardOutput &out, const FrameTargets &t) {
  BLXAM_DATA_CHECK(out.lid_probs.rank() == 2 && out.lid_probs.cols() == 3,
                   "loss_lid: expected [frames x 3] probabilities, got "
                       << out.lid_probs.shape_str());
  BLXAM_DATA_CHECK(t.lid.size() == out.lid_probs.rows(),
                   "loss_lid: " << t.lid.size() << " targets for "
                                << out.lid_probs.rows() << " frames");
  double sum = 0.0;
  for (std::size_t f = 0; f < t.lid.size(); ++f) {
    BLXAM_DATA_CHECK(t.lid[f] >= 0 && t.lid[f] < 3,
                     "loss_lid: target " << t.lid[f]
                                         << " out of range [0, 3) at frame "
                                         << f);
    sum -= std::log(out.lid_probs.at(f, static_cast<std::size_t>(t.lid[f])));
  }
  return sum / static_cast<double>(t.lid.size());
}

// ---------------------------------------------------------------------
// Training plan
// ---------------------------------------------------------------------

enum class Stage { kBilingualPretrain, kLidFinetune, kAuxJoint };

inline Stage parse_stage(const std::string &s) {
  if (s == "bilingual-pretrain") return Stage::kBilingualPretrain;
  if (s == "lid-finetune") return Stage::kLidFinetune;
  if (s == "aux-joint") return Stage::kAuxJoint;
  throw ConfigError(
      "unknown training stage '" + s +
      "' (expected bilingual-pretrain, lid-finetune or aux-joint)");
}

inline const char *stage_name(Stage s) {
  switch (s) {
    case Stage::kBilingualPretrain: return "bilingual-pretrain";
    case Stage::kLidFinetune: return "lid-finetune";
    case Stage::kAuxJoint: return "aux-joint";
  }
  return "?";
}

/// One training stage's schedule: loss weights, Adam settings, epoch and
/// batch counts, shuffling seed, and freezing. `frozen_prefixes` freezes
/// additional parameter groups by name prefix on top of what the stage
/// itself implies; `finetune_freezes_shared` controls whether lid-finetune
/// keeps the shared stack (and input projection) fixed.
struct TrainingPlan {
  std::string stage = "aux-joint";
  double main_loss_weight = 1.0;
  double lid_loss_weight = 0.02;
  double aux_loss_weight_a = 0.5;
  double aux_loss_weight_b = 0.5;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t epochs = 1;
  std::size_t batch_utterances = 8;
  std::size_t warmup_steps = 100;  // linear lr warmup; 0 disables
  std::uint64_t seed = 0;
  bool finetune_freezes_shared = true;
  std::vector<std::string> frozen_prefixes;

  void validate() const {
    const Stage s = parse_stage(stage);
    BLXAM_CONFIG_CHECK(main_loss_weight >= 0.0 && lid_loss_weight >= 0.0 &&
                           aux_loss_weight_a >= 0.0 && aux_loss_weight_b >= 0.0,
                       "loss weights must be nonnegative");
    BLXAM_CONFIG_CHECK(s == Stage::kBilingualPretrain || main_loss_weight > 0.0,
                       "main_loss_weight must be positive outside "
                       "bilingual-pretrain");
    BLXAM_CONFIG_CHECK(learning_rate > 0.0, "learning_rate must be positive");
    BLXAM_CONFIG_CHECK(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 &&
                           beta2 < 1.0,
                       "Adam betas must lie in [0, 1)");
    BLXAM_CONFIG_CHECK(eps > 0.0, "Adam eps must be positive");
    BLXAM_CONFIG_CHECK(epochs >= 1, "epochs must be at least 1");
    BLXAM_CONFIG_CHECK(batch_utterances >= 1,
                       "batch_utterances must be at least 1");
  }
};

/// Auxiliary-loss objective over an evaluated forward pass:
/// main_loss_weight * CE(bilingual) + sum of per-locale aux CE terms.
inline double loss_aux(const ForwardOutput &out, const FrameTargets &t,
                       const TrainingPlan &plan) {
  double total = plan.main_loss_weight * loss_bilingual(out, t);
  if (plan.aux_loss_weight_a > 0.0)
    total += plan.aux_loss_weight_a *
             train_detail::mean_ce_logp(out.logp_mono_a, t.mono_a,
                                        "loss_aux");
  if (plan.aux_loss_weight_b > 0.0)
    total += plan.aux_loss_weight_b *
             train_detail::mean_ce_logp(out.logp_mono_b, t.mono_b,
                                        "loss_aux");
  return total;
}

// ---------------------------------------------------------------------
// Train log
// ---------------------------------------------------------------------

/// One epoch's record. `total` is exactly the weighted sum of the listed
/// components; `wall_ms` is informational and excluded from the
/// reproducibility contract.
struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  std::vector<std::pair<std::string, double>> components;  // frame-mean CE
  std::vector<std::pair<std::string, double>> weights;     // same order
  double total = 0.0;
  std::vector<std::pair<std::string, double>> accuracy;  // per head
  std::size_t frames = 0;
  std::uint64_t param_checksum = 0;
  double wall_ms = 0.0;
};

struct TrainLog {
  std::string stage;
  std::vector<EpochRecord> epochs;
};

namespace train_detail {

inline void append_num(std::string &s, double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  s += buf;
}

}  // namespace train_detail

/// One tab-separated line per epoch. Keys, in order: epoch, stage, frames,
/// loss_total, then loss_<c> and weight_<c> per component, acc_<head> per
/// head, param_checksum (hex), and wall_ms last. Records for equal seeds
/// and data are byte-identical up to the trailing wall_ms field.
inline std::string format_epoch_record(const EpochRecord &r,
                                       const std::string &stage) {
  std::string s;
  s += "epoch\t" + std::to_string(r.epoch);
  s += "\tstage\t" + stage;
  s += "\tframes\t" + std::to_string(r.frames);
  s += "\tloss_total\t";
  train_detail::append_num(s, r.total);
  for (std::size_t i = 0; i < r.components.size(); ++i) {
    s += "\tloss_" + r.components[i].first + "\t";
    train_detail::append_num(s, r.components[i].second);
    s += "\tweight_" + r.weights[i].first + "\t";
    train_detail::append_num(s, r.weights[i].second);
  }
  for (const auto &[head, acc] : r.accuracy) {
    s += "\tacc_" + head + "\t";
    train_detail::append_num(s, acc);
  }
  char hex[24];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(r.param_checksum));
  s += "\tparam_checksum\t";
  s += hex;
  s += "\twall_ms\t";
  train_detail::append_num(s, r.wall_ms);
  return s;
}

inline std::string format_train_log(const TrainLog &log) {
  std::string s;
  for (const auto &r : log.epochs) {
    s += format_epoch_record(r, log.stage);
    s += '\n';
  }
  return s;
}

inline void save_train_log(const std::string &path, const TrainLog &log) {
  atomic_write_text(path, format_train_log(log));
}

// ---------------------------------------------------------------------
// Staged training
// ---------------------------------------------------------------------

namespace train_detail {

/// Loss/accuracy accumulator over one epoch, frame-pooled.
struct Meter {
  double ce_frames = 0.0;  // sum of per-utterance mean CE * frames
  std::size_t frames = 0;
  std::size_t correct = 0;
  void add(double ce, std::size_t correct_frames, std::size_t n) {
    ce_frames += ce * static_cast<double>(n);
    frames += n;
    correct += correct_frames;
  }
  double mean_ce() const {
    return frames == 0 ? 0.0 : ce_frames / static_cast<double>(frames);
  }
  double acc() const {
    return frames == 0 ? 0.0
                       : static_cast<double>(correct) /
                             static_cast<double>(frames);
  }
};

inline bool has_prefix(const std::string &name, const std::string &prefix) {
  return name.size() >= prefix.size() &&
         name.compare(0, prefix.size(), prefix) == 0;
}

}  // namespace train_detail

/// Runs one training stage over `data`, mutating the model in place, and
/// returns the per-epoch log. Batches are whole utterances in a
/// seed-determined order; each optimizer step consumes one batch.
inline TrainLog train_stage(AcousticModel &model,
                            const std::vector<Utterance> &data,
                            const TrainingPlan &plan) {
  using train_detail::Meter;
  plan.validate();
  const Stage stage = parse_stage(plan.stage);
  BLXAM_DATA_CHECK(!data.empty(), "train_stage: no training utterances");
  for (const Utterance &u : data)
    BLXAM_DATA_CHECK(u.frames() > 0,
                     "train_stage: utterance '" << u.id << "' has no frames");

  // lid-finetune continues from a pretrained model; a fresh random init
  // has never taken an optimizer step.
  if (stage == Stage::kLidFinetune) {
    bool trained = false;
    for (const auto &[name, p] : model.store.params())
      if (train_detail::has_prefix(name, "shared.") && p.step > 0)
        trained = true;
    BLXAM_DATA_CHECK(trained,
                     "lid-finetune requires a pretrained model (run "
                     "bilingual-pretrain first)");
  }

  // Hard locale routing for pretrain: 0 routes through pe_a, 1 through
  // pe_b. Mixed-locale utterances have no single route.
  std::vector<int> route(data.size(), 0);
  if (stage == Stage::kBilingualPretrain) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      bool has_a = false, has_b = false;
      for (const auto &[word, locale] : data[i].words) {
        if (locale == model.config.locale_a) has_a = true;
        else if (locale == model.config.locale_b) has_b = true;
      }
      BLXAM_DATA_CHECK(!(has_a && has_b),
                       "bilingual-pretrain needs single-locale utterances; '"
                           << data[i].id << "' mixes locales");
      route[i] = has_b ? 1 : 0;  // all-silence defaults to the A route
    }
  }

  std::vector<FrameTargets> targets;
  targets.reserve(data.size());
  for (const Utterance &u : data)
    targets.push_back(make_frame_targets(u, model.space));

  // Trainable parameter groups by stage. Pretrain adds per-locale groups
  // only when the batch actually routes an utterance through them, so
  // every selected parameter is guaranteed a gradient.
  const bool aux_a = plan.aux_loss_weight_a > 0.0;
  const bool aux_b = plan.aux_loss_weight_b > 0.0;
  std::vector<std::string> base_prefixes;
  switch (stage) {
    case Stage::kBilingualPretrain:
      base_prefixes = {"in.", "shared."};
      break;
    case Stage::kLidFinetune:
      base_prefixes = {"pe_a.", "pe_b.", "lid.", "head_combined."};
      if (!plan.finetune_freezes_shared) {
        base_prefixes.push_back("in.");
        base_prefixes.push_back("shared.");
      }
      break;
    case Stage::kAuxJoint:
      base_prefixes = {"in.", "shared.", "pe_a.", "pe_b.", "head_bilingual."};
      if (aux_a) base_prefixes.push_back("head_a.");
      if (aux_b) base_prefixes.push_back("head_b.");
      break;
  }

  TrainLog log;
  log.stage = plan.stage;
  std::size_t global_step = 0;

  for (std::size_t epoch = 1; epoch <= plan.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(mix_seed(plan.seed, epoch));
    shuffle_rng.shuffle(order);

    Meter m_mono_a, m_mono_b, m_bilingual, m_combined, m_lid;

    for (std::size_t begin = 0; begin < order.size();
         begin += plan.batch_utterances) {
      const std::size_t end =
          std::min(begin + plan.batch_utterances, order.size());
      double batch_frames = 0.0;
      for (std::size_t i = begin; i < end; ++i)
        batch_frames += static_cast<double>(data[order[i]].frames());

      Tape tape;
      std::vector<std::pair<Node *, double>> terms;
      bool batch_has_a = false, batch_has_b = false;

      for (std::size_t i = begin; i < end; ++i) {
        const Utterance &u = data[order[i]];
        const FrameTargets &t = targets[order[i]];
        const std::size_t uf = u.frames();
        const double share = static_cast<double>(uf) / batch_frames;
        Node *sh = model.forward_shared(tape, u.features);

        if (stage == Stage::kBilingualPretrain) {
          const bool is_a = route[order[i]] == 0;
          (is_a ? batch_has_a : batch_has_b) = true;
          const std::string &loc =
              is_a ? model.config.locale_a : model.config.locale_b;
          const std::vector<int> &ids = is_a ? t.mono_a : t.mono_b;
          Node *logp = model.project_monolingual(
              tape, loc, model.forward_pe(tape, loc, sh));
          Node *ce = ops::cross_entropy(tape, logp, ids);
          terms.emplace_back(ce, share);
          (is_a ? m_mono_a : m_mono_b)
              .add(ce->val.v[0],
                   train_detail::frames_correct(logp->val, ids), uf);
        } else if (stage == Stage::kLidFinetune) {
          Node *ha = model.forward_pe(tape, model.config.locale_a, sh);
          Node *hb = model.forward_pe(tape, model.config.locale_b, sh);
          AcousticModel::LidNodes lid = model.lid_forward(tape, sh);
          Node *logp = model.project_lid_combined(
              tape, ops::soft_combine(tape, ha, hb, lid.probs));
          Node *ce_main = ops::cross_entropy(tape, logp, t.bilingual);
          Node *ce_lid = ops::cross_entropy(tape, lid.logits, t.lid);
          terms.emplace_back(ce_main, plan.main_loss_weight * share);
          terms.emplace_back(ce_lid, plan.lid_loss_weight * share);
          m_combined.add(ce_main->val.v[0],
                         train_detail::frames_correct(logp->val, t.bilingual),
                         uf);
          m_lid.add(ce_lid->val.v[0],
                    train_detail::frames_correct(lid.probs->val, t.lid), uf);
        } else {  // aux-joint
          Node *ha = model.forward_pe(tape, model.config.locale_a, sh);
          Node *hb = model.forward_pe(tape, model.config.locale_b, sh);
          Node *logp_bi = model.project_bilingual(tape, ha, hb);
          Node *ce_bi = ops::cross_entropy(tape, logp_bi, t.bilingual);
          terms.emplace_back(ce_bi, plan.main_loss_weight * share);
          m_bilingual.add(
              ce_bi->val.v[0],
              train_detail::frames_correct(logp_bi->val, t.bilingual), uf);
          if (aux_a) {
            Node *logp_a = model.project_monolingual(
                tape, model.config.locale_a, ha);
            Node *ce_a = ops::cross_entropy(tape, logp_a, t.mono_a);
            terms.emplace_back(ce_a, plan.aux_loss_weight_a * share);
            m_mono_a.add(ce_a->val.v[0],
                         train_detail::frames_correct(logp_a->val, t.mono_a),
                         uf);
          }
          if (aux_b) {
            Node *logp_b = model.project_monolingual(
                tape, model.config.locale_b, hb);
            Node *ce_b = ops::cross_entropy(tape, logp_b, t.mono_b);
            terms.emplace_back(ce_b, plan.aux_loss_weight_b * share);
            m_mono_b.add(ce_b->val.v[0],
                         train_detail::frames_correct(logp_b->val, t.mono_b),
                         uf);
          }
        }
      }

      Node *total = ops::weighted_sum(tape, terms);
      tape.backward(total);
      ++global_step;
      double lr = plan.learning_rate;
      if (plan.warmup_steps > 0 && global_step < plan.warmup_steps)
        lr *= static_cast<double>(global_step) /
              static_cast<double>(plan.warmup_steps);

      std::vector<std::string> prefixes = base_prefixes;
      if (stage == Stage::kBilingualPretrain) {
        if (batch_has_a) {
          prefixes.push_back("pe_a.");
          prefixes.push_back("head_a.");
        }
        if (batch_has_b) {
          prefixes.push_back("pe_b.");
          prefixes.push_back("head_b.");
        }
      }
      const std::vector<std::string> &frozen = plan.frozen_prefixes;
      model.store.adam_step(
          lr, plan.beta1, plan.beta2, plan.eps,
          [&prefixes, &frozen](const std::string &name) {
            for (const std::string &f : frozen)
              if (train_detail::has_prefix(name, f)) return false;
            for (const std::string &p : prefixes)
              if (train_detail::has_prefix(name, p)) return true;
            return false;
          });
    }

    EpochRecord rec;
    rec.epoch = epoch;
    const double epoch_frames =
        static_cast<double>(m_mono_a.frames + m_mono_b.frames +
                            m_bilingual.frames + m_combined.frames);
    auto push = [&rec](const char *name, const Meter &m, double weight) {
      rec.components.emplace_back(name, m.mean_ce());
      rec.weights.emplace_back(name, weight);
      rec.accuracy.emplace_back(name, m.acc());
      rec.frames += m.frames;
    };
    switch (stage) {
      case Stage::kBilingualPretrain:
        // Routed subsets: weights are the frame shares, so the total is
        // the frame-pooled mean over the whole epoch.
        push("mono_a", m_mono_a,
             static_cast<double>(m_mono_a.frames) / epoch_frames);
        push("mono_b", m_mono_b,
             static_cast<double>(m_mono_b.frames) / epoch_frames);
        break;
      case Stage::kLidFinetune:
        push("combined", m_combined, plan.main_loss_weight);
        push("lid", m_lid, plan.lid_loss_weight);
        rec.frames = m_combined.frames;  // same frames counted twice above
        break;
      case Stage::kAuxJoint:
        push("bilingual", m_bilingual, plan.main_loss_weight);
        if (aux_a) push("mono_a", m_mono_a, plan.aux_loss_weight_a);
        if (aux_b) push("mono_b", m_mono_b, plan.aux_loss_weight_b);
        rec.frames = m_bilingual.frames;
        break;
    }
    rec.total = 0.0;
    for (std::size_t i = 0; i < rec.components.size(); ++i)
      rec.total += rec.weights[i].second * rec.components[i].second;
    rec.param_checksum = model.store.value_checksum();
    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    log.epochs.push_back(std::move(rec));
  }
  return log;
}

}  // namespace blxam

#endif  // BLXAM_TRAINING_HPP_
