// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmpolymer/struct_encoder.hpp"

#include <cmath>
#include <string>

#include "mmpolymer/error.hpp"

namespace mmp {

namespace {

// N(0, 1/fan_in) weights
Tensor fan_in_normal(std::size_t rows, std::size_t cols, Rng &rng) {
  return normal_tensor(rows, cols, 1.0 / std::sqrt(static_cast<double>(rows)), rng);
}

std::string layer_key(std::size_t layer, const char *suffix) {
  return "struct.l" + std::to_string(layer) + "." + suffix;
}

}  // namespace

StructConfig StructConfig::full_scale() {
  StructConfig c;
  c.atom_dim = 512;
  c.pair_dim = 64;
  c.layers = 15;
  c.ff_dim = 2048;
  return c;
}

void StructConfig::validate() const {
  if (atom_dim == 0 || pair_dim == 0 || layers == 0 || ff_dim == 0)
    throw Error(Errc::kConfigError, "structure encoder sizes must be positive");
  if (atom_dim % pair_dim != 0)
    throw Error(Errc::kConfigError, "pair_dim must divide atom_dim");
  if (atom_types < 2) throw Error(Errc::kConfigError, "atom type table too small");
  if (!(max_distance > 0.0) || !(sigma_floor > 0.0))
    throw Error(Errc::kConfigError, "max_distance and sigma_floor must be positive");
}

void init_struct_params(ParamStore &params, const StructConfig &config, Rng &rng) {
  config.validate();
  const std::size_t da = config.atom_dim, dp = config.pair_dim, t = config.atom_types;
  params.add("struct.atom_emb", normal_tensor(t, da, 1.0, rng));
  params.add("struct.gauss.v", Tensor::matrix(t * t, dp, 1.0));
  params.add("struct.gauss.u", Tensor::matrix(t * t, dp));
  Tensor mu = Tensor::matrix(1, dp);
  for (std::size_t k = 0; k < dp; ++k)
    mu[k] = dp == 1 ? 0.0 : config.max_distance * static_cast<double>(k) / static_cast<double>(dp - 1);
  params.add("struct.gauss.mu", std::move(mu));
  params.add("struct.gauss.sigma", Tensor::matrix(1, dp, 1.0));
  for (std::size_t l = 0; l < config.layers; ++l) {
    params.add(layer_key(l, "ln1.g"), Tensor::matrix(1, da, 1.0));
    params.add(layer_key(l, "ln1.b"), Tensor::matrix(1, da));
    for (const char *w : {"attn.wq", "attn.wk", "attn.wv", "attn.wo"})
      params.add(layer_key(l, w), fan_in_normal(da, da, rng));
    params.add(layer_key(l, "ln2.g"), Tensor::matrix(1, da, 1.0));
    params.add(layer_key(l, "ln2.b"), Tensor::matrix(1, da));
    params.add(layer_key(l, "ff.w1"), fan_in_normal(da, config.ff_dim, rng));
    params.add(layer_key(l, "ff.b1"), Tensor::matrix(1, config.ff_dim));
    params.add(layer_key(l, "ff.w2"), fan_in_normal(config.ff_dim, da, rng));
    params.add(layer_key(l, "ff.b2"), Tensor::matrix(1, da));
  }
  params.add("denoise.psi.w1", fan_in_normal(dp, dp, rng));
  params.add("denoise.psi.b1", Tensor::matrix(1, dp));
  // near-zero output layer: the decoder starts close to the identity map
  params.add("denoise.psi.w2", normal_tensor(dp, 1, 0.02, rng));
  params.add("denoise.psi.b2", Tensor::matrix(1, 1));
}

Tensor coords_tensor(std::span<const Vec3> coords) {
  Tensor t = Tensor::matrix(coords.size(), 3);
  for (std::size_t i = 0; i < coords.size(); ++i)
    for (std::size_t k = 0; k < 3; ++k) t(i, k) = coords[i][k];
  return t;
}

StructInput make_struct_input(const std::vector<int> &atoms, std::span<const Vec3> coords,
                              const StructConfig &config) {
  if (atoms.size() != coords.size())
    throw Error(Errc::kShapeMismatch, "atom and coordinate counts differ");
  StructInput in;
  in.atoms = atoms;
  in.coords = coords_tensor(coords);
  in.distances = pair_distances(coords);
  const std::size_t n = atoms.size(), t = config.atom_types;
  for (int a : atoms)
    if (a < 0 || static_cast<std::size_t>(a) >= t)
      throw Error(Errc::kUnknownAtomType, "atom type id " + std::to_string(a));
  in.pair_types.resize(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      in.pair_types[i * n + j] = static_cast<std::int32_t>(atoms[i] * static_cast<int>(t) + atoms[j]);
  return in;
}

StructInput make_struct_input(const VirtualizedConformer &conformer, const StructConfig &config) {
  return make_struct_input(conformer.atoms, conformer.coords, config);
}

ad::Var gaussian_pair_embedding(Binding &p, const StructConfig &config, const StructInput &in) {
  return ad::gaussian_pair(in.distances, in.pair_types, p["struct.gauss.v"], p["struct.gauss.u"],
                           p["struct.gauss.mu"], p["struct.gauss.sigma"], config.sigma_floor);
}

PairLayerOutput atom_to_pair_layer(Binding &p, const StructConfig &config, std::size_t layer,
                                   const ad::Var &atoms, const ad::Var &pair) {
  using namespace ad;
  const std::size_t n = atoms.rows();
  if (atoms.cols() != config.atom_dim || pair.rows() != n * n || pair.cols() != config.pair_dim)
    throw Error(Errc::kShapeMismatch, "atom/pair representation shapes disagree with config");
  auto w = [&](const char *s) { return p[layer_key(layer, s)]; };
  const std::size_t h = config.pair_dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(config.head_dim()));

  Var a = layer_norm(atoms, w("ln1.g"), w("ln1.b"));
  Var scores = attention_scores(matmul(a, w("attn.wq")), matmul(a, w("attn.wk")), h, scale, pair);
  Var ctx = attend(scores, matmul(a, w("attn.wv")), h);
  Var x = atoms + matmul(ctx, w("attn.wo"));
  Var b = layer_norm(x, w("ln2.g"), w("ln2.b"));
  Var hid = gelu(add_row(matmul(b, w("ff.w1")), w("ff.b1")));
  x = x + add_row(matmul(hid, w("ff.w2")), w("ff.b2"));
  return {x, scores};
}

StructOutput encode_structure(Binding &p, const StructConfig &config, const StructInput &in) {
  StructOutput out;
  ad::Var atoms = ad::embedding(p["struct.atom_emb"], in.atoms);
  out.pair0 = gaussian_pair_embedding(p, config, in);
  ad::Var pair = out.pair0;
  for (std::size_t l = 0; l < config.layers; ++l) {
    auto step = atom_to_pair_layer(p, config, l, atoms, pair);
    atoms = step.atoms;
    pair = step.pair;
    out.pair_layers.push_back(pair);
  }
  out.atoms = atoms;
  out.pair = pair;
  out.pooled = ad::row(atoms, 0);
  return out;
}

ad::Var reconstruct_coordinates(Binding &p, const StructOutput &encoded,
                                const Tensor &noisy_coords) {
  using namespace ad;
  Var delta = encoded.pair - encoded.pair0;
  Var hid = gelu(add_row(matmul(delta, p["denoise.psi.w1"]), p["denoise.psi.b1"]));
  Var weights = add_row(matmul(hid, p["denoise.psi.w2"]), p["denoise.psi.b2"]);
  return pair_displacement(weights, noisy_coords);
}

}  // namespace mmp
