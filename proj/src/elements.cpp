// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmpolymer/elements.hpp"

#include <array>

namespace mmp {
namespace {

constexpr std::array<std::string_view, 119> kSymbols = {
    "",   "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na",
    "Mg", "Al", "Si", "P",  "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",
    "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br",
    "Kr", "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag",
    "Cd", "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr",
    "Nd", "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu",
    "Hf", "Ta", "W",  "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi",
    "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U",  "Np", "Pu", "Am",
    "Cm", "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh",
    "Hs", "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og",
};

}  // namespace

std::optional<int> atomic_number(std::string_view symbol) noexcept {
  for (int z = 1; z < static_cast<int>(kSymbols.size()); ++z)
    if (kSymbols[z] == symbol) return z;
  return std::nullopt;
}

std::string_view element_symbol(int z) noexcept {
  if (z < 1 || z >= static_cast<int>(kSymbols.size())) return {};
  return kSymbols[z];
}

bool is_organic_subset(std::string_view symbol) noexcept {
  static constexpr std::array<std::string_view, 10> kOrganic = {
      "B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"};
  for (auto s : kOrganic)
    if (s == symbol) return true;
  return false;
}

}  // namespace mmp
