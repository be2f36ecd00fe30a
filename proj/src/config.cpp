// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmpolymer/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "mmpolymer/error.hpp"

namespace mmp {

namespace {

using json = nlohmann::ordered_json;

std::size_t to_size(std::string_view key, std::string_view v) {
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw Error(Errc::kConfigError, std::string(key) + ": expected a non-negative integer, got '" +
                                        std::string(v) + "'");
  return out;
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw Error(Errc::kConfigError, std::string(key) + ": expected an unsigned integer, got '" +
                                        std::string(v) + "'");
  return out;
}

double to_real(std::string_view key, std::string_view v) {
  const std::string s(v);
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(s, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(out))
    throw Error(Errc::kConfigError, std::string(key) + ": expected a number, got '" + s + "'");
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error(Errc::kConfigError, std::string(key) + ": expected true or false");
}

struct KeySpec {
  const char *name;
  std::function<void(RunConfig &, std::string_view key, std::string_view)> set;
  std::function<json(const RunConfig &)> get;
};

#define MMP_SIZE_KEY(NAME, FIELD)                                                          \
  KeySpec{NAME, [](RunConfig &c, std::string_view k, std::string_view v) { c.FIELD = to_size(k, v); }, \
          [](const RunConfig &c) { return json(c.FIELD); }}
#define MMP_REAL_KEY(NAME, FIELD)                                                          \
  KeySpec{NAME, [](RunConfig &c, std::string_view k, std::string_view v) { c.FIELD = to_real(k, v); }, \
          [](const RunConfig &c) { return json(c.FIELD); }}

const std::vector<KeySpec> &specs() {
  static const std::vector<KeySpec> table = {
      MMP_SIZE_KEY("seq_dim", model.seq.dim),
      MMP_SIZE_KEY("seq_layers", model.seq.layers),
      MMP_SIZE_KEY("seq_heads", model.seq.heads),
      MMP_SIZE_KEY("seq_ff_dim", model.seq.ff_dim),
      MMP_SIZE_KEY("max_length", model.seq.max_length),
      MMP_SIZE_KEY("atom_dim", model.structure.atom_dim),
      MMP_SIZE_KEY("pair_dim", model.structure.pair_dim),
      MMP_SIZE_KEY("struct_layers", model.structure.layers),
      MMP_SIZE_KEY("struct_ff_dim", model.structure.ff_dim),
      MMP_REAL_KEY("max_distance", model.structure.max_distance),
      MMP_REAL_KEY("sigma_floor", model.structure.sigma_floor),
      MMP_SIZE_KEY("contrast_dim", model.contrast_dim),
      MMP_SIZE_KEY("batch_size", pretrain.batch_size),
      MMP_SIZE_KEY("steps", pretrain.steps),
      MMP_REAL_KEY("lr", pretrain.adam.lr),
      MMP_REAL_KEY("beta1", pretrain.adam.beta1),
      MMP_REAL_KEY("beta2", pretrain.adam.beta2),
      MMP_REAL_KEY("eps", pretrain.adam.eps),
      MMP_REAL_KEY("tau", pretrain.tau),
      MMP_REAL_KEY("noise_scale", pretrain.noise_scale),
      MMP_REAL_KEY("mask_rate", pretrain.masking.rate),
      MMP_REAL_KEY("mask_fraction", pretrain.masking.mask_fraction),
      MMP_REAL_KEY("random_fraction", pretrain.masking.random_fraction),
      MMP_SIZE_KEY("folds", finetune.folds),
      MMP_SIZE_KEY("epochs", finetune.epochs),
      MMP_SIZE_KEY("ft_batch_size", finetune.batch_size),
      MMP_REAL_KEY("ft_lr", finetune.adam.lr),
      MMP_SIZE_KEY("head_hidden", finetune.head_hidden),
      KeySpec{"freeze_encoder",
              [](RunConfig &c, std::string_view k, std::string_view v) { c.finetune.freeze_encoder = to_bool(k, v); },
              [](const RunConfig &c) { return json(c.finetune.freeze_encoder); }},
      KeySpec{"strategy",
              [](RunConfig &c, std::string_view, std::string_view v) { c.strategy = psmiles::parse_strategy(v); },
              [](const RunConfig &c) { return json(std::string(psmiles::strategy_name(c.strategy))); }},
      KeySpec{"tasks",
              [](RunConfig &c, std::string_view, std::string_view v) { c.tasks = TaskToggles::parse(v); },
              [](const RunConfig &c) { return json(c.tasks.to_string()); }},
      KeySpec{"modality",
              [](RunConfig &c, std::string_view, std::string_view v) { c.modality = parse_modality(v); },
              [](const RunConfig &c) { return json(std::string(modality_name(c.modality))); }},
      KeySpec{"seed",
              [](RunConfig &c, std::string_view k, std::string_view v) { c.seed = to_u64(k, v); },
              [](const RunConfig &c) { return json(c.seed); }},
  };
  return table;
}

#undef MMP_SIZE_KEY
#undef MMP_REAL_KEY

const KeySpec *find_spec(std::string_view key) {
  for (const auto &s : specs())
    if (key == s.name) return &s;
  return nullptr;
}

}  // namespace

void RunConfig::sync_seed() {
  pretrain.seed = seed;
  finetune.seed = seed;
}

void RunConfig::validate() const {
  // Vocabulary size is only known once a corpus or checkpoint is read.
  ModelConfig probe = model;
  probe.seq.vocab_size = std::max<std::size_t>(probe.seq.vocab_size, psmiles::Vocabulary::kReservedCount + 1);
  probe.validate();
  pretrain.validate();
  finetune.validate();
  const auto &m = pretrain.masking;
  if (m.mask_fraction < 0.0 || m.random_fraction < 0.0 || m.mask_fraction + m.random_fraction > 1.0)
    throw Error(Errc::kConfigError, "mask_fraction + random_fraction must lie in [0, 1]");
}

const std::vector<std::string> &config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto &s : specs()) k.emplace_back(s.name);
    return k;
  }();
  return keys;
}

void apply_setting(RunConfig &config, std::string_view key, std::string_view value) {
  const KeySpec *spec = find_spec(key);
  if (spec == nullptr) throw Error(Errc::kConfigError, "unknown config key '" + std::string(key) + "'");
  spec->set(config, key, value);
}

RunConfig parse_config(std::string_view json_text, RunConfig base) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception &e) {
    throw Error(Errc::kConfigError, std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(Errc::kConfigError, "config must be a flat JSON object");
  for (const auto &[key, value] : j.items()) {
    if (value.is_object() || value.is_array() || value.is_null())
      throw Error(Errc::kConfigError, "config key '" + key + "' must hold a scalar");
    apply_setting(base, key, value.is_string() ? value.get<std::string>() : value.dump());
  }
  return base;
}

RunConfig load_config(const std::string &path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIoError, "cannot open config " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), std::move(base));
}

std::string config_to_json(const RunConfig &config) {
  json j = json::object();
  for (const auto &s : specs()) j[s.name] = s.get(config);
  return j.dump(2) + "\n";
}

}  // namespace mmp
