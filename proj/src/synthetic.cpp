// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmpolymer/synthetic.hpp"

#include <array>
#include <set>
#include <string_view>

#include "mmpolymer/error.hpp"
#include "mmpolymer/psmiles.hpp"

namespace mmp {

namespace {

// Backbone fragments found in common polymer families. Each starts and ends
// on an aliphatic atom, so a `*` next to it never touches a ring atom.
constexpr std::array<std::string_view, 24> kMotifs{
    "CC",          "CC(C)",         "CC(C)(C)",      "CC(c1ccccc1)", "OCC",
    "C(=O)O",      "C(=O)N",        "NC(=O)",        "CC(F)(F)",     "CC(Cl)",
    "CS",          "COC",           "CC(O)",         "C=C",          "CC(C#N)",
    "Cc1ccc(C)cc1", "CC(=O)",       "OC(=O)",        "CCCC",         "CN",
    "C(F)(F)C(F)(F)", "CC(OC(=O)C)", "Cc1ccncc1C",   "CC(C(=O)OC)"};

// Tokens the training motifs never produce.
constexpr std::array<std::string_view, 8> kExoticMotifs{
    "[Si](C)(C)O", "C[NH]C",    "C[C@@H](C)", "CC%10CCCCC%10C", "C-C",
    "C/C=C/C",     "C[Se]C",    "CC1CC(Br)CC1C"};

template <std::size_t N>
std::string_view pick(const std::array<std::string_view, N> &items, Rng &rng) {
  return items[rng.index(N)];
}

}  // namespace

std::vector<std::string> synthetic_psmiles(std::size_t count, Rng &rng,
                                           const SyntheticOptions &options) {
  if (options.min_motifs < 1 || options.max_motifs < options.min_motifs)
    throw Error(Errc::kConfigError, "invalid motif count range");
  std::vector<std::string> out;
  std::set<std::string> seen;
  std::size_t attempts = 0;
  const std::size_t span = options.max_motifs - options.min_motifs + 1;
  while (out.size() < count) {
    if (++attempts > 1000 * (count + 10))
      throw Error(Errc::kConfigError, "cannot generate enough distinct polymers");
    const std::size_t motifs = options.min_motifs + rng.index(span);
    std::string body;
    for (std::size_t k = 0; k < motifs; ++k) {
      if (options.exotic_tokens && rng.uniform() < 0.3)
        body += pick(kExoticMotifs, rng);
      else
        body += pick(kMotifs, rng);
    }
    std::string text;
    // Second star either at the end or in a trailing branch, like "C(*)=O".
    const char last = body.back();
    if (rng.uniform() < 0.2 && last == 'C') {
      text = "*" + body + "(*)" + (rng.uniform() < 0.5 ? "=O" : "C");
    } else {
      text = "*" + body + "*";
    }
    if (seen.count(text)) continue;
    try {
      for (auto s : {psmiles::StarStrategy::kRemove, psmiles::StarStrategy::kSubstitute})
        psmiles::parse(psmiles::transform_stars(text, s));
    } catch (const Error &) {
      continue;
    }
    seen.insert(text);
    out.push_back(std::move(text));
  }
  return out;
}

double heavy_atom_count(std::string_view psmiles) {
  return static_cast<double>(psmiles::parse(psmiles).heavy_atom_count());
}

double heteroatom_count(std::string_view psmiles) {
  std::size_t n = 0;
  for (const auto &a : psmiles::parse(psmiles).atoms)
    if (!a.is_star && a.element != "C") ++n;
  return static_cast<double>(n);
}

double synthetic_property(std::string_view name, std::string_view psmiles) {
  if (name == "heavy_atoms") return heavy_atom_count(psmiles);
  if (name == "heteroatoms") return heteroatom_count(psmiles);
  throw Error(Errc::kConfigError, "unknown synthetic property '" + std::string(name) + "'");
}

}  // namespace mmp
