// blxam/config.hpp

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

#ifndef BLXAM_CONFIG_HPP_
#define BLXAM_CONFIG_HPP_

// Run configuration: one INI-style file describing the corpus, model,
// training schedule, and decoder for a pipeline run. Every key is
// schema-checked; unknown sections or keys and malformed values are
// collected and reported together, not one at a time. The same schema
// drives `section.key=value` command-line overrides and the canonical
// echo written into the output directory.

#include <cstdint>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "blxam/decode.hpp"
#include "blxam/error.hpp"
#include "blxam/fileio.hpp"
#include "blxam/model.hpp"
#include "blxam/synthdata.hpp"
#include "blxam/training.hpp"

namespace blxam {

/// Everything a pipeline run is parameterized by. Locale names and the
/// feature dimension live in the corpus section only; the model always
/// follows the corpus (one source of truth).
struct RunConfig {
  std::uint64_t seed = 0;
  std::string out_dir = "runs/out";

  // Synthetic corpus.
  std::string locale_a = "it";
  std::string locale_b = "en";
  std::size_t n_words = 50;
  double shared_fraction = 0.1;
  std::size_t feature_dim = 16;
  double noise_var = 0.05;
  CorpusSizes sizes{{400, 0, 100}, {400, 0, 100}, {0, 0, 100}, 2, 5};

  ModelConfig model;
  TrainingPlan train;
  DecodeConfig decode;

  /// The model config with the corpus-owned fields filled in.
  ModelConfig effective_model() const {
    ModelConfig m = model;
    m.feature_dim = feature_dim;
    m.locale_a = locale_a;
    m.locale_b = locale_b;
    return m;
  }
};

namespace config_detail {

struct Errors {
  std::vector<std::string> messages;

  void add(const std::string &where, const std::string &what) {
    messages.push_back(where.empty() ? what : where + ": " + what);
  }
  void raise_if_any() const {
    if (messages.empty()) return;
    std::string all = "invalid configuration:";
    for (const std::string &m : messages) all += "\n  " + m;
    throw ConfigError(all);
  }
};

inline bool parse_u64(const std::string &v, std::uint64_t *out) {
  try {
    std::size_t used = 0;
    const unsigned long long n = std::stoull(v, &used);
    if (used != v.size()) return false;
    *out = n;
    return true;
  } catch (const std::exception &) {
    return false;
  }
}

inline bool parse_size(const std::string &v, std::size_t *out) {
  std::uint64_t n = 0;
  if (!parse_u64(v, &n)) return false;
  *out = static_cast<std::size_t>(n);
  return true;
}

inline bool parse_real(const std::string &v, double *out) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) return false;
    *out = d;
    return true;
  } catch (const std::exception &) {
    return false;
  }
}

inline bool parse_flag(const std::string &v, bool *out) {
  if (v == "true" || v == "1") {
    *out = true;
    return true;
  }
  if (v == "false" || v == "0") {
    *out = false;
    return true;
  }
  return false;
}

inline std::string render_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// One schema entry: how to set the field from text (appending a message
/// on bad values) and how to render its current value canonically.
struct KeyEntry {
  const char *section;
  const char *key;
  std::function<void(RunConfig &, const std::string &, const std::string &,
                     Errors &)>
      apply;
  std::function<std::string(const RunConfig &)> render;
};

inline const std::vector<KeyEntry> &schema() {
  auto u64_entry = [](const char *sec, const char *key,
                      std::uint64_t RunConfig::*field) {
    return KeyEntry{
        sec, key,
        [field, key](RunConfig &c, const std::string &v,
                     const std::string &where, Errors &errs) {
          if (!parse_u64(v, &(c.*field)))
            errs.add(where, std::string("bad integer '") + v + "' for '" +
                                key + "'");
        },
        [field](const RunConfig &c) { return std::to_string(c.*field); }};
  };
  auto str_entry = [](const char *sec, const char *key,
                      std::string RunConfig::*field) {
    return KeyEntry{sec, key,
                    [field](RunConfig &c, const std::string &v,
                            const std::string &, Errors &) { c.*field = v; },
                    [field](const RunConfig &c) { return c.*field; }};
  };
  // size_t / double fields reached through an accessor, so nested structs
  // (sizes, model, train, decode) share the same plumbing.
  auto size_entry = [](const char *sec, const char *key,
                       std::function<std::size_t &(RunConfig &)> ref) {
    return KeyEntry{
        sec, key,
        [ref, key](RunConfig &c, const std::string &v,
                   const std::string &where, Errors &errs) {
          if (!parse_size(v, &ref(c)))
            errs.add(where, std::string("bad integer '") + v + "' for '" +
                                key + "'");
        },
        [ref](const RunConfig &c) {
          return std::to_string(ref(const_cast<RunConfig &>(c)));
        }};
  };
  auto real_entry = [](const char *sec, const char *key,
                       std::function<double &(RunConfig &)> ref) {
    return KeyEntry{
        sec, key,
        [ref, key](RunConfig &c, const std::string &v,
                   const std::string &where, Errors &errs) {
          if (!parse_real(v, &ref(c)))
            errs.add(where,
                     std::string("bad number '") + v + "' for '" + key + "'");
        },
        [ref](const RunConfig &c) {
          return render_real(ref(const_cast<RunConfig &>(c)));
        }};
  };
  auto flag_entry = [](const char *sec, const char *key,
                       std::function<bool &(RunConfig &)> ref) {
    return KeyEntry{
        sec, key,
        [ref, key](RunConfig &c, const std::string &v,
                   const std::string &where, Errors &errs) {
          if (!parse_flag(v, &ref(c)))
            errs.add(where, std::string("bad flag '") + v + "' for '" + key +
                                "' (expected true or false)");
        },
        [ref](const RunConfig &c) {
          return ref(const_cast<RunConfig &>(c)) ? "true" : "false";
        }};
  };

  static const std::vector<KeyEntry> entries = [&]() {
    std::vector<KeyEntry> e;
    e.push_back(u64_entry("run", "seed", &RunConfig::seed));
    e.push_back(str_entry("run", "out_dir", &RunConfig::out_dir));

    e.push_back(str_entry("corpus", "locale_a", &RunConfig::locale_a));
    e.push_back(str_entry("corpus", "locale_b", &RunConfig::locale_b));
    e.push_back(size_entry("corpus", "n_words", [](RunConfig &c) -> std::size_t & {
      return c.n_words;
    }));
    e.push_back(real_entry("corpus", "shared_fraction",
                           [](RunConfig &c) -> double & {
                             return c.shared_fraction;
                           }));
    e.push_back(size_entry("corpus", "feature_dim",
                           [](RunConfig &c) -> std::size_t & {
                             return c.feature_dim;
                           }));
    e.push_back(real_entry("corpus", "noise_var", [](RunConfig &c) -> double & {
      return c.noise_var;
    }));
    struct SplitField {
      const char *name;
      SplitSizes CorpusSizes::*split;
    };
    struct CountField {
      const char *name;
      std::size_t SplitSizes::*count;
    };
    static std::vector<std::string> names;  // keeps the key c_str()s alive
    names.reserve(9);
    for (const SplitField cond : {SplitField{"mono_a", &CorpusSizes::mono_a},
                                  SplitField{"mono_b", &CorpusSizes::mono_b},
                                  SplitField{"code_mixed",
                                             &CorpusSizes::code_mixed}})
      for (const CountField split : {CountField{"train", &SplitSizes::train},
                                     CountField{"dev", &SplitSizes::dev},
                                     CountField{"test", &SplitSizes::test}}) {
        names.push_back(std::string(cond.name) + "_" + split.name);
        e.push_back(size_entry(
            "corpus", names.back().c_str(),
            [cond, split](RunConfig &c) -> std::size_t & {
              return (c.sizes.*(cond.split)).*(split.count);
            }));
      }
    e.push_back(size_entry("corpus", "min_words_per_utt",
                           [](RunConfig &c) -> std::size_t & {
                             return c.sizes.min_words_per_utt;
                           }));
    e.push_back(size_entry("corpus", "max_words_per_utt",
                           [](RunConfig &c) -> std::size_t & {
                             return c.sizes.max_words_per_utt;
                           }));

    e.push_back(size_entry("model", "model_dim",
                           [](RunConfig &c) -> std::size_t & {
                             return c.model.model_dim;
                           }));
    e.push_back(size_entry("model", "heads", [](RunConfig &c) -> std::size_t & {
      return c.model.heads;
    }));
    e.push_back(size_entry("model", "ff_dim", [](RunConfig &c) -> std::size_t & {
      return c.model.ff_dim;
    }));
    e.push_back(size_entry("model", "n_shared_layers",
                           [](RunConfig &c) -> std::size_t & {
                             return c.model.n_shared_layers;
                           }));
    e.push_back(size_entry("model", "n_pe_layers",
                           [](RunConfig &c) -> std::size_t & {
                             return c.model.n_pe_layers;
                           }));
    e.push_back(size_entry("model", "n_lid_layers",
                           [](RunConfig &c) -> std::size_t & {
                             return c.model.n_lid_layers;
                           }));
    e.push_back(size_entry("model", "chunk_frames",
                           [](RunConfig &c) -> std::size_t & {
                             return c.model.chunk_frames;
                           }));
    e.push_back(KeyEntry{
        "model", "left_context_frames",
        [](RunConfig &c, const std::string &v, const std::string &where,
           Errors &errs) {
          if (v == "unlimited") {
            c.model.left_context_frames = ops::kUnlimitedContext;
            return;
          }
          if (!parse_size(v, &c.model.left_context_frames))
            errs.add(where, "bad value '" + v +
                                "' for 'left_context_frames' (expected a "
                                "frame count or 'unlimited')");
        },
        [](const RunConfig &c) -> std::string {
          return c.model.left_context_frames == ops::kUnlimitedContext
                     ? "unlimited"
                     : std::to_string(c.model.left_context_frames);
        }});
    e.push_back(KeyEntry{
        "model", "combination_mode",
        [](RunConfig &c, const std::string &v, const std::string &where,
           Errors &errs) {
          if (v != "lid" && v != "aux")
            errs.add(where, "bad value '" + v +
                                "' for 'combination_mode' (expected lid or "
                                "aux)");
          else
            c.model.combination_mode = v;
        },
        [](const RunConfig &c) { return c.model.combination_mode; }});

    e.push_back(KeyEntry{
        "train", "stage",
        [](RunConfig &c, const std::string &v, const std::string &where,
           Errors &errs) {
          try {
            parse_stage(v);
            c.train.stage = v;
          } catch (const ConfigError &ex) {
            errs.add(where, ex.what());
          }
        },
        [](const RunConfig &c) { return c.train.stage; }});
    e.push_back(real_entry("train", "main_loss_weight",
                           [](RunConfig &c) -> double & {
                             return c.train.main_loss_weight;
                           }));
    e.push_back(real_entry("train", "lid_loss_weight",
                           [](RunConfig &c) -> double & {
                             return c.train.lid_loss_weight;
                           }));
    e.push_back(real_entry("train", "aux_loss_weight_a",
                           [](RunConfig &c) -> double & {
                             return c.train.aux_loss_weight_a;
                           }));
    e.push_back(real_entry("train", "aux_loss_weight_b",
                           [](RunConfig &c) -> double & {
                             return c.train.aux_loss_weight_b;
                           }));
    e.push_back(real_entry("train", "learning_rate",
                           [](RunConfig &c) -> double & {
                             return c.train.learning_rate;
                           }));
    e.push_back(real_entry("train", "beta1", [](RunConfig &c) -> double & {
      return c.train.beta1;
    }));
    e.push_back(real_entry("train", "beta2", [](RunConfig &c) -> double & {
      return c.train.beta2;
    }));
    e.push_back(real_entry("train", "eps", [](RunConfig &c) -> double & {
      return c.train.eps;
    }));
    e.push_back(size_entry("train", "epochs", [](RunConfig &c) -> std::size_t & {
      return c.train.epochs;
    }));
    e.push_back(size_entry("train", "batch_utterances",
                           [](RunConfig &c) -> std::size_t & {
                             return c.train.batch_utterances;
                           }));
    e.push_back(size_entry("train", "warmup_steps",
                           [](RunConfig &c) -> std::size_t & {
                             return c.train.warmup_steps;
                           }));
    e.push_back(flag_entry("train", "finetune_freezes_shared",
                           [](RunConfig &c) -> bool & {
                             return c.train.finetune_freezes_shared;
                           }));

    e.push_back(KeyEntry{
        "decode", "mode",
        [](RunConfig &c, const std::string &v, const std::string &where,
           Errors &errs) {
          try {
            c.decode.mode = parse_output_mode(v);
          } catch (const Error &ex) {
            errs.add(where, ex.what());
          }
        },
        [](const RunConfig &c) { return output_mode_name(c.decode.mode); }});
    e.push_back(KeyEntry{
        "decode", "search",
        [](RunConfig &c, const std::string &v, const std::string &where,
           Errors &errs) {
          if (v != "greedy" && v != "beam")
            errs.add(where, "bad value '" + v +
                                "' for 'search' (expected greedy or beam)");
          else
            c.decode.search = v;
        },
        [](const RunConfig &c) { return c.decode.search; }});
    e.push_back(size_entry("decode", "beam_width",
                           [](RunConfig &c) -> std::size_t & {
                             return c.decode.beam_width;
                           }));
    e.push_back(real_entry("decode", "lm_weight",
                           [](RunConfig &c) -> double & {
                             return c.decode.lm_weight;
                           }));
    e.push_back(size_entry("decode", "chunk_frames",
                           [](RunConfig &c) -> std::size_t & {
                             return c.decode.chunk_frames;
                           }));
    return e;
  }();
  return entries;
}

inline const KeyEntry *find_entry(const std::string &section,
                                  const std::string &key) {
  for (const KeyEntry &e : schema())
    if (section == e.section && key == e.key) return &e;
  return nullptr;
}

inline std::string trimmed(const std::string &s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace config_detail

/// Applies INI-style text ("[section]" headers, "key = value" lines, '#'
/// comments) on top of the current values. Collects every unknown
/// section/key and malformed value and raises them as one ConfigError.
inline void apply_config_text(RunConfig &cfg, const std::string &text,
                              const std::string &origin) {
  using config_detail::trimmed;
  config_detail::Errors errs;
  std::istringstream in(text);
  std::string line, section;
  bool section_known = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trimmed(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (t.front() == '[') {
      if (t.back() != ']') {
        errs.add(where, "malformed section header '" + t + "'");
        section_known = false;
        continue;
      }
      section = trimmed(t.substr(1, t.size() - 2));
      section_known = false;
      for (const auto &e : config_detail::schema())
        if (section == e.section) section_known = true;
      if (!section_known)
        errs.add(where, "unknown section '" + section + "'");
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      errs.add(where, "expected 'key = value', got '" + t + "'");
      continue;
    }
    if (!section_known) continue;  // already reported the section once
    const std::string key = trimmed(t.substr(0, eq));
    const std::string value = trimmed(t.substr(eq + 1));
    if (section.empty()) {
      errs.add(where, "key '" + key + "' appears before any [section]");
      continue;
    }
    const config_detail::KeyEntry *entry =
        config_detail::find_entry(section, key);
    if (entry == nullptr) {
      errs.add(where, "unknown key '" + key + "' in section [" + section +
                          "]");
      continue;
    }
    entry->apply(cfg, value, where, errs);
  }
  errs.raise_if_any();
}

/// Applies one "section.key=value" override (the --set form). Errors go
/// into `errs` so a batch of overrides reports every problem at once.
inline void apply_config_override(RunConfig &cfg, const std::string &spec,
                                  config_detail::Errors &errs) {
  const std::size_t eq = spec.find('=');
  if (eq == std::string::npos) {
    errs.add("", "override '" + spec + "' is not section.key=value");
    return;
  }
  const std::string path = config_detail::trimmed(spec.substr(0, eq));
  const std::string value = config_detail::trimmed(spec.substr(eq + 1));
  const std::size_t dot = path.find('.');
  if (dot == std::string::npos) {
    errs.add("", "override '" + spec + "' is not section.key=value");
    return;
  }
  const std::string section = path.substr(0, dot);
  const std::string key = path.substr(dot + 1);
  const config_detail::KeyEntry *entry =
      config_detail::find_entry(section, key);
  if (entry == nullptr) {
    errs.add("", "unknown override key '" + path + "'");
    return;
  }
  entry->apply(cfg, value, "--set " + path, errs);
}

/// Canonical rendering of every key in schema order; parsing it back
/// reproduces the config exactly. This is what gets echoed into the
/// output directory.
inline std::string render_run_config(const RunConfig &cfg) {
  std::ostringstream os;
  std::string section;
  for (const auto &e : config_detail::schema()) {
    if (section != e.section) {
      if (!section.empty()) os << '\n';
      section = e.section;
      os << '[' << section << "]\n";
    }
    os << e.key << " = " << e.render(cfg) << '\n';
  }
  return os.str();
}

inline RunConfig load_run_config(const std::string &path) {
  RunConfig cfg;
  apply_config_text(cfg, read_text_file(path), path);
  return cfg;
}

}  // namespace blxam

#endif  // BLXAM_CONFIG_HPP_
