// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MMPOLYMER_STRUCT_ENCODER_HPP_
#define MMPOLYMER_STRUCT_ENCODER_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mmpolymer/autodiff.hpp"
#include "mmpolymer/conformer.hpp"
#include "mmpolymer/params.hpp"
#include "mmpolymer/rng.hpp"

namespace mmp {

struct StructConfig {
  std::size_t atom_dim = 64;
  std::size_t pair_dim = 8;  // heads and Gaussian kernels
  std::size_t layers = 3;
  std::size_t ff_dim = 128;
  std::size_t atom_types = atom_types::kCount;
  double max_distance = 10.0;  // basis centres span [0, max_distance]
  double sigma_floor = 1e-2;

  // 15 layers, 64 heads.
  static StructConfig full_scale();
  std::size_t head_dim() const noexcept { return atom_dim / pair_dim; }
  void validate() const;  // Errc::kConfigError
};

// Registers struct.* and denoise.* parameters.
void init_struct_params(ParamStore &params, const StructConfig &config, Rng &rng);

// Geometry-derived encoder input.
struct StructInput {
  std::vector<int> atoms;
  Tensor coords;     // N x 3
  Tensor distances;  // N x N
  std::vector<std::int32_t> pair_types;  // a_i * T + a_j, row-major over (i, j)
};

StructInput make_struct_input(const VirtualizedConformer &conformer, const StructConfig &config);
StructInput make_struct_input(const std::vector<int> &atoms, std::span<const Vec3> coords,
                              const StructConfig &config);

// Pair tensors are (N*N) x pair_dim with entry (i, j, k) at row i*N + j.
ad::Var gaussian_pair_embedding(Binding &params, const StructConfig &config,
                                const StructInput &input);

struct PairLayerOutput {
  ad::Var atoms;
  ad::Var pair;  // pre-softmax scores of every head
};

PairLayerOutput atom_to_pair_layer(Binding &params, const StructConfig &config,
                                   std::size_t layer, const ad::Var &atoms,
                                   const ad::Var &pair);

struct StructOutput {
  ad::Var atoms;   // X_a after the last layer, N x d_a
  ad::Var pair0;   // Gaussian pair embedding
  ad::Var pair;    // pair representation after the last layer
  ad::Var pooled;  // virtual-atom row, 1 x d_a
  std::vector<ad::Var> pair_layers;  // one per layer
};

StructOutput encode_structure(Binding &params, const StructConfig &config,
                              const StructInput &input);

// p_i + sum_j psi(x_ij^L - x_ij^0) (p_i - p_j) / N over all N atoms,
// virtual atom included.
ad::Var reconstruct_coordinates(Binding &params, const StructOutput &encoded,
                                const Tensor &noisy_coords);

Tensor coords_tensor(std::span<const Vec3> coords);

}  // namespace mmp

#endif  // MMPOLYMER_STRUCT_ENCODER_HPP_
