// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "mmpolymer/elements.hpp"
#include "mmpolymer/error.hpp"
#include "mmpolymer/psmiles.hpp"

namespace mmp::psmiles {
namespace {

bool is_bond_char(char c) {
  return c == '-' || c == '=' || c == '#' || c == ':' || c == '/' || c == '\\';
}

// Uppercase element written so that it is valid outside a ring system.
std::string substitute_symbol(const Atom &atom) {
  if (is_organic_subset(atom.element)) return atom.element;
  return "[" + atom.element + "]";
}

// Byte range to erase for a terminal star so that the rest stays grammatical.
std::pair<std::size_t, std::size_t> removal_span(std::string_view text,
                                                 const Atom &star) {
  std::size_t begin = star.begin;
  std::size_t end = star.end;
  std::size_t lead = begin;
  if (lead > 0 && is_bond_char(text[lead - 1])) --lead;
  // "(*)" or "(=*)": the branch becomes empty, so drop it entirely
  if (lead > 0 && text[lead - 1] == '(' && end < text.size() && text[end] == ')')
    return {lead - 1, end + 1};
  if (lead < begin) return {lead, end};
  // leading star: take the following bond symbol with it
  if (begin == 0 && end < text.size() && is_bond_char(text[end])) ++end;
  return {begin, end};
}

}  // namespace

StarStrategy parse_strategy(std::string_view name) {
  if (name == "keep") return StarStrategy::kKeep;
  if (name == "remove") return StarStrategy::kRemove;
  if (name == "substitute") return StarStrategy::kSubstitute;
  throw Error(Errc::kConfigError, "unknown star strategy '" + std::string(name) +
                                      "' (expected keep, remove or substitute)");
}

std::string_view strategy_name(StarStrategy strategy) noexcept {
  switch (strategy) {
  case StarStrategy::kKeep: return "keep";
  case StarStrategy::kRemove: return "remove";
  case StarStrategy::kSubstitute: return "substitute";
  }
  return "keep";
}

std::string transform_stars(std::string_view text, StarStrategy strategy) {
  const MolGraph g = parse(text);
  if (strategy == StarStrategy::kKeep) return std::string(text);

  const auto stars = g.star_indices();
  if (stars.size() != 2)
    throw Error(Errc::kStarCountError, "expected exactly two '*' in " +
                                           std::string(text) + ", found " +
                                           std::to_string(stars.size()));
  const std::size_t n0 = g.neighbors(stars[0]).front();
  const std::size_t n1 = g.neighbors(stars[1]).front();
  if (n0 == stars[1] || n1 == stars[0])
    throw Error(Errc::kAdjacentStarsError, "the two '*' are bonded to each other");

  std::string out(text);
  if (strategy == StarStrategy::kSubstitute) {
    // right-to-left so earlier spans stay valid
    const std::string r0 = substitute_symbol(g.atoms[n1]);
    const std::string r1 = substitute_symbol(g.atoms[n0]);
    const Atom &s0 = g.atoms[stars[0]];
    const Atom &s1 = g.atoms[stars[1]];
    out.replace(s1.begin, s1.end - s1.begin, r1);
    out.replace(s0.begin, s0.end - s0.begin, r0);
    parse(out);
    return out;
  }

  auto span0 = removal_span(text, g.atoms[stars[0]]);
  auto span1 = removal_span(text, g.atoms[stars[1]]);
  out.erase(span1.first, span1.second - span1.first);
  out.erase(span0.first, span0.second - span0.first);
  try {
    parse(out);
  } catch (const Error &) {
    // Unusual layouts ("*(C)..."): rebuild from the graph instead.
    MolGraph stripped;
    std::vector<std::size_t> remap(g.atoms.size(), static_cast<std::size_t>(-1));
    for (const auto &a : g.atoms) {
      if (a.is_star) continue;
      remap[a.index] = stripped.atoms.size();
      Atom copy = a;
      copy.index = stripped.atoms.size();
      stripped.atoms.push_back(std::move(copy));
    }
    for (const auto &b : g.bonds) {
      if (g.atoms[b.a].is_star || g.atoms[b.b].is_star) continue;
      stripped.bonds.push_back({remap[b.a], remap[b.b], b.order, b.symbol});
    }
    out = write_smiles(stripped);
    parse(out);
  }
  return out;
}

}  // namespace mmp::psmiles
