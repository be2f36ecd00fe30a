// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MMPOLYMER_PSMILES_HPP_
#define MMPOLYMER_PSMILES_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmpolymer/rng.hpp"

namespace mmp::psmiles {

// ---------------------------------------------------------------------------
// Molecular graph
// ---------------------------------------------------------------------------

enum class BondOrder : std::uint8_t {
  kSingle = 1,
  kDouble = 2,
  kTriple = 3,
  kAromatic = 4,
};

struct Atom {
  std::size_t index = 0;
  std::string element;  // canonical symbol, "*" for the wildcard
  bool aromatic = false;
  bool is_star = false;
  bool bracket = false;
  std::string text;  // as written: "c", "Cl", "[nH]", "*"
  std::size_t begin = 0;  // byte span of `text` in the source string
  std::size_t end = 0;
};

struct Bond {
  std::size_t a = 0;
  std::size_t b = 0;
  BondOrder order = BondOrder::kSingle;
  char symbol = '\0';  // explicit bond character, '\0' when implicit
};

struct MolGraph {
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;

  std::vector<std::size_t> neighbors(std::size_t atom) const;
  std::size_t degree(std::size_t atom) const;
  std::vector<std::size_t> star_indices() const;
  // Atoms that are not `*` wildcards (hydrogens are implicit).
  std::size_t heavy_atom_count() const;
};

// Parses the supported SMILES subset: organic-subset and bracket atoms,
// bond symbols `-=#:/\`, branches and ring closures (digit and `%nn`).
// Atoms are numbered in order of appearance. Dot-disconnected input is
// rejected.
MolGraph parse(std::string_view text);

// Depth-first SMILES writer. Atom text is emitted as it was parsed, so
// parse(write_smiles(g)) has the same atom multiset and bond count as g.
std::string write_smiles(const MolGraph &graph);

// ---------------------------------------------------------------------------
// Star handling
// ---------------------------------------------------------------------------

enum class StarStrategy { kKeep, kRemove, kSubstitute };

StarStrategy parse_strategy(std::string_view name);
std::string_view strategy_name(StarStrategy strategy) noexcept;

// Keep: identity. Remove: deletes both wildcards together with their bond
// symbol, dropping a branch that becomes empty. Substitute: every `*` is
// written as the element of the atom bonded to the other `*`.
std::string transform_stars(std::string_view text, StarStrategy strategy);

// ---------------------------------------------------------------------------
// Tokens and vocabulary
// ---------------------------------------------------------------------------

inline constexpr std::string_view kPadToken = "[PAD]";
inline constexpr std::string_view kClsToken = "[CLS]";
inline constexpr std::string_view kSepToken = "[SEP]";
inline constexpr std::string_view kMaskToken = "[MASK]";
inline constexpr std::string_view kUnkToken = "[UNK]";

bool is_special_token(std::string_view token) noexcept;

struct TokenSequence {
  std::vector<std::string> tokens;
};

// Chemistry-aware lexer without special tokens: bracket atoms, Cl/Br/Si/Se,
// and `%nn` ring labels are single tokens, everything else one character.
std::vector<std::string> lex(std::string_view text);

TokenSequence tokenize(std::string_view text);

std::string detokenize(const TokenSequence &sequence);

class Vocabulary {
 public:
  static constexpr int kPadId = 0;
  static constexpr int kClsId = 1;
  static constexpr int kSepId = 2;
  static constexpr int kMaskId = 3;
  static constexpr int kUnkId = 4;
  static constexpr int kReservedCount = 5;

  // Reserved tokens only.
  Vocabulary();

  // Reserved tokens followed by the sorted unique tokens of the corpus.
  static Vocabulary build(std::span<const std::string> corpus);

  // Rebuilds from a stored token list; the reserved prefix must match.
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  int id(std::string_view token) const;
  const std::string &token(int id) const;
  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string> &tokens() const noexcept { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::vector<int> sorted_ids_;  // ids ordered by token text, for lookup
};

std::vector<int> encode_ids(const TokenSequence &sequence,
                            const Vocabulary &vocab);

// ---------------------------------------------------------------------------
// Masked-token corruption
// ---------------------------------------------------------------------------

struct MaskingPolicy {
  double rate = 0.15;
  double mask_fraction = 0.8;    // replaced by [MASK]
  double random_fraction = 0.1;  // replaced by a random non-special token
};

enum class MaskBranch : std::uint8_t { kMask, kRandom, kKeep };

struct MaskedSequence {
  std::vector<int> input_ids;           // after corruption
  std::vector<std::size_t> positions;   // the mask set, ascending
  std::vector<int> labels;              // original ids at `positions`
  std::vector<MaskBranch> branches;     // replacement applied per position
};

// [PAD], [CLS] and [SEP] positions are never selected.
MaskedSequence apply_masking(std::span<const int> ids, const Vocabulary &vocab,
                             const MaskingPolicy &policy, Rng &rng);

MaskedSequence apply_masking(const TokenSequence &sequence,
                             const Vocabulary &vocab,
                             const MaskingPolicy &policy, Rng &rng);

}  // namespace mmp::psmiles

#endif  // MMPOLYMER_PSMILES_HPP_
