// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmpolymer/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "mmpolymer/error.hpp"

namespace mmp {

namespace {

using json = nlohmann::ordered_json;

constexpr std::array<char, 8> kMagic{'M', 'M', 'P', 'C', 'K', 'P', 'T', '\0'};

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap64(v);
  return v;
}

void write_u64(std::ostream &out, std::uint64_t v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char *>(&v), sizeof v);
}

void write_f64(std::ostream &out, std::span<const double> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char *>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
  } else {
    for (double d : values) write_u64(out, std::bit_cast<std::uint64_t>(d));
  }
}

[[noreturn]] void corrupt(const std::string &what) {
  throw Error(Errc::kCorruptPayload, "checkpoint: " + what);
}

}  // namespace

void save_checkpoint(std::ostream &out, const Checkpoint &checkpoint) {
  json manifest;
  manifest["version"] = kCheckpointVersion;
  manifest["config"] = json::parse(config_to_json(checkpoint.config));
  manifest["vocab"] = checkpoint.vocab.tokens();
  if (checkpoint.head) {
    manifest["head"] = {{"modality", std::string(modality_name(checkpoint.head->modality))},
                        {"target_mean", checkpoint.head->target_mean},
                        {"target_std", checkpoint.head->target_std}};
  }
  json tensors = json::array();
  std::uint64_t offset = 0;
  for (const auto &[name, entry] : checkpoint.params.entries()) {
    tensors.push_back({{"name", name},
                       {"dtype", "f64"},
                       {"shape", entry.value.shape()},
                       {"offset", offset},
                       {"trainable", entry.trainable}});
    offset += entry.value.size() * sizeof(double);
  }
  manifest["tensors"] = std::move(tensors);
  manifest["payload_bytes"] = offset;

  const std::string text = manifest.dump();
  out.write(kMagic.data(), kMagic.size());
  write_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto &[name, entry] : checkpoint.params.entries()) write_f64(out, entry.value.values());
  if (!out) throw Error(Errc::kIoError, "checkpoint write failed");
}

void save_checkpoint(const std::string &path, const Checkpoint &checkpoint) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::kIoError, "cannot write checkpoint " + path);
  save_checkpoint(out, checkpoint);
}

Checkpoint load_checkpoint(std::istream &in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) corrupt("bad magic");
  std::uint64_t length = 0;
  if (!in.read(reinterpret_cast<char *>(&length), sizeof length)) corrupt("truncated header");
  length = to_little(length);
  if (length > (std::uint64_t{1} << 32)) corrupt("manifest length out of range");
  std::string text(length, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(length))) corrupt("truncated manifest");

  json manifest;
  try {
    manifest = json::parse(text);
  } catch (const json::exception &) {
    corrupt("manifest is not JSON");
  }

  Checkpoint ck;
  try {
    const auto version = manifest.at("version").get<std::uint32_t>();
    if (version != kCheckpointVersion)
      throw Error(Errc::kVersionMismatch, "checkpoint format version " + std::to_string(version) +
                                              ", expected " + std::to_string(kCheckpointVersion));
    ck.config = parse_config(manifest.at("config").dump());
    ck.vocab = psmiles::Vocabulary::from_tokens(manifest.at("vocab").get<std::vector<std::string>>());
    ck.config.model.seq.vocab_size = ck.vocab.size();
    if (manifest.contains("head")) {
      const auto &h = manifest["head"];
      ck.head = HeadInfo{parse_modality(h.at("modality").get<std::string>()),
                         h.at("target_mean").get<double>(), h.at("target_std").get<double>()};
    }

    const auto payload_bytes = manifest.at("payload_bytes").get<std::uint64_t>();
    std::string payload(payload_bytes, '\0');
    if (!in.read(payload.data(), static_cast<std::streamsize>(payload_bytes)))
      corrupt("truncated payload");
    if (in.peek() != std::char_traits<char>::eof()) corrupt("trailing bytes after payload");

    std::uint64_t expected = 0;
    for (const auto &t : manifest.at("tensors")) {
      const auto name = t.at("name").get<std::string>();
      if (t.at("dtype").get<std::string>() != "f64") corrupt(name + ": unsupported dtype");
      const auto shape = t.at("shape").get<std::vector<std::size_t>>();
      const auto offset = t.at("offset").get<std::uint64_t>();
      std::uint64_t count = 1;
      for (auto s : shape) count *= s;
      if (offset != expected || offset + count * sizeof(double) > payload_bytes)
        corrupt(name + ": offset does not match the payload");
      std::vector<double> values(count);
      std::memcpy(values.data(), payload.data() + offset, count * sizeof(double));
      if constexpr (std::endian::native == std::endian::big)
        for (double &d : values) d = std::bit_cast<double>(to_little(std::bit_cast<std::uint64_t>(d)));
      ck.params.add(name, Tensor(shape, std::move(values)), t.value("trainable", true));
      expected = offset + count * sizeof(double);
    }
    if (expected != payload_bytes) corrupt("payload size does not match the tensor index");
  } catch (const json::exception &e) {
    corrupt(std::string("malformed manifest: ") + e.what());
  } catch (const Error &e) {
    if (e.code() == Errc::kVersionMismatch || e.code() == Errc::kCorruptPayload) throw;
    corrupt(e.what());
  }
  return ck;
}

Checkpoint load_checkpoint(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIoError, "cannot open checkpoint " + path);
  return load_checkpoint(in);
}

void check_architecture(const Checkpoint &checkpoint, const ModelConfig &model) {
  const ParamStore reference = init_model(model, 0);
  for (const auto &[name, entry] : reference.entries()) {
    if (name.rfind("seq.", 0) != 0 && name.rfind("struct.", 0) != 0) continue;
    if (!checkpoint.params.contains(name))
      throw Error(Errc::kVersionMismatch, "checkpoint lacks tensor " + name);
    if (!checkpoint.params.get(name).same_shape(entry.value))
      throw Error(Errc::kVersionMismatch, "tensor " + name + " has a different shape");
  }
  for (const auto &[name, entry] : checkpoint.params.entries())
    if ((name.rfind("seq.", 0) == 0 || name.rfind("struct.", 0) == 0) && !reference.contains(name))
      throw Error(Errc::kVersionMismatch, "checkpoint tensor " + name + " not in the requested architecture");
}

FinetunedModel to_finetuned(const Checkpoint &checkpoint) {
  if (!checkpoint.head) throw Error(Errc::kConfigError, "checkpoint carries no fine-tuned head");
  FinetunedModel m;
  m.config = checkpoint.config.model;
  m.modality = checkpoint.head->modality;
  m.params = checkpoint.params;
  m.target_mean = checkpoint.head->target_mean;
  m.target_std = checkpoint.head->target_std;
  return m;
}

}  // namespace mmp
