// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MMPOLYMER_ELEMENTS_HPP_
#define MMPOLYMER_ELEMENTS_HPP_

#include <optional>
#include <string_view>

namespace mmp {

// Atomic number for a canonical element symbol ("C", "Cl"), or nullopt.
std::optional<int> atomic_number(std::string_view symbol) noexcept;

// Symbol for atomic number 1..118.
std::string_view element_symbol(int z) noexcept;

// Elements writable without brackets in SMILES.
bool is_organic_subset(std::string_view symbol) noexcept;

}  // namespace mmp

#endif  // MMPOLYMER_ELEMENTS_HPP_
