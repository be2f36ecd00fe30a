// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MMPOLYMER_SYNTHETIC_HPP_
#define MMPOLYMER_SYNTHETIC_HPP_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "mmpolymer/rng.hpp"

namespace mmp {

struct SyntheticOptions {
  // Backbone motifs per repeating unit.
  std::size_t min_motifs = 1;
  std::size_t max_motifs = 4;
  // Adds bracket atoms, bond symbols and %nn ring labels; the tokenizer
  // round-trip corpus uses these, training corpora do not.
  bool exotic_tokens = false;
};

// Distinct random repeating units assembled from common backbone motifs,
// each with two `*` atoms bonded to non-aromatic atoms. Every string parses and survives all
// three star strategies.
std::vector<std::string> synthetic_psmiles(std::size_t count, Rng &rng,
                                           const SyntheticOptions &options = {});

// Labels for synthetic regression datasets, computed from the graph with
// the `*` atoms excluded.
double heavy_atom_count(std::string_view psmiles);
double heteroatom_count(std::string_view psmiles);  // heavy atoms other than C

// Property by name: "heavy_atoms" or "heteroatoms".
double synthetic_property(std::string_view name, std::string_view psmiles);

}  // namespace mmp

#endif  // MMPOLYMER_SYNTHETIC_HPP_
