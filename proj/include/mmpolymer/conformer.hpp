// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MMPOLYMER_CONFORMER_HPP_
#define MMPOLYMER_CONFORMER_HPP_

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmpolymer/rng.hpp"
#include "mmpolymer/tensor.hpp"

namespace mmp {

using Vec3 = std::array<double, 3>;

// Atom-type ids seen by the structure encoder: the virtual atom, the `*`
// wildcard, then elements H..Xe at id Z + 1.
namespace atom_types {
inline constexpr int kVirtual = 0;
inline constexpr int kWildcard = 1;
inline constexpr int kMaxAtomicNumber = 54;
inline constexpr int kCount = kMaxAtomicNumber + 2;

int from_symbol(std::string_view symbol);  // Errc::kUnknownAtomType
std::string symbol(int type);
}  // namespace atom_types

// Repeating-unit conformation: atom types and coordinates in Angstrom.
struct Conformer {
  std::string psmiles;
  std::vector<int> atoms;
  std::vector<Vec3> coords;

  std::size_t size() const noexcept { return atoms.size(); }
  // Throws kInvariantViolation for N = 0, non-finite coordinates or two
  // atoms closer than 1e-6 A, kMalformedRecord for ragged data.
  void validate() const;
};

// Conformer with a virtual atom at index 0 placed at the centroid of the
// real atoms.
struct VirtualizedConformer {
  std::string psmiles;
  std::vector<int> atoms;
  std::vector<Vec3> coords;

  std::size_t size() const noexcept { return atoms.size(); }
  Conformer strip_virtual() const;
};

struct NoisyConformer {
  VirtualizedConformer clean;
  std::vector<Vec3> noisy;  // virtual row recentered on the noisy atoms
  std::vector<Vec3> noise;  // noisy - clean, row by row

  VirtualizedConformer noisy_conformer() const;
};

Conformer make_conformer(std::string psmiles, std::span<const std::string> symbols,
                         std::vector<Vec3> coords);

// JSON Lines: {"psmiles": str, "atoms": [str...], "coords": [[x,y,z]...]}.
std::vector<Conformer> read_conformers(std::istream &in);
std::vector<Conformer> load_conformers(const std::string &path);
void write_conformers(std::ostream &out, std::span<const Conformer> conformers);

VirtualizedConformer add_virtual_atom(const Conformer &conformer);

// Independent Uniform(-scale, scale) displacement of every real-atom
// coordinate component.
NoisyConformer inject_noise(const VirtualizedConformer &conformer, double scale, Rng &rng);

Tensor pair_distances(std::span<const Vec3> coords);

// Deterministic test layout: atoms in order of appearance, each placed
// 1.5 A from the previous one along an alternating 3D zig-zag. Not a
// physical geometry. `*` atoms become wildcard-typed atoms.
Conformer chain_embed(std::string_view psmiles);

inline constexpr double kChainStep = 1.5;

}  // namespace mmp

#endif  // MMPOLYMER_CONFORMER_HPP_
