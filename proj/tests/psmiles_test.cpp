// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <map>

#include "mmpolymer/error.hpp"
#include "mmpolymer/psmiles.hpp"
#include "mmpolymer/synthetic.hpp"

namespace mmp::psmiles {
namespace {

std::vector<std::string> toks(std::string_view s) { return tokenize(s).tokens; }

Errc code_of(const std::function<void()> &f) {
  try {
    f();
  } catch (const Error &e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::kConfigError;
}

TEST(Parse, SingleAtom) {
  const auto g = parse("C");
  EXPECT_EQ(g.atoms.size(), 1u);
  EXPECT_TRUE(g.bonds.empty());
}

TEST(Parse, StarsAtEnds) {
  const auto g = parse("*CC*");
  EXPECT_EQ(g.atoms.size(), 4u);
  EXPECT_EQ(g.bonds.size(), 3u);
  EXPECT_EQ(g.star_indices(), (std::vector<std::size_t>{0, 3}));
}

TEST(Parse, StarNeighbours) {
  const auto g = parse("*CC(*)F");
  const auto stars = g.star_indices();
  ASSERT_EQ(stars.size(), 2u);
  EXPECT_EQ(g.neighbors(stars[0]), std::vector<std::size_t>{1});
  EXPECT_EQ(g.neighbors(stars[1]), std::vector<std::size_t>{2});
}

TEST(Parse, Errors) {
  EXPECT_EQ(code_of([] { parse("CC(C"); }), Errc::kUnbalancedParentheses);
  EXPECT_EQ(code_of([] { parse("CC)C"); }), Errc::kUnbalancedParentheses);
  EXPECT_EQ(code_of([] { parse("C1CC"); }), Errc::kDanglingRingBond);
  EXPECT_EQ(code_of([] { parse("CXC"); }), Errc::kUnknownElement);
  EXPECT_EQ(code_of([] { parse("C*(C)C"); }), Errc::kStarDegreeError);
  EXPECT_EQ(code_of([] { parse("C[NH"); }), Errc::kUnterminatedBracketAtom);
  EXPECT_EQ(code_of([] { parse("CC.CC"); }), Errc::kDisconnected);
  EXPECT_EQ(code_of([] { parse(""); }), Errc::kEmptyInput);
}

TEST(Parse, RingsAndBrackets) {
  const auto g = parse("c1ccccc1[NH3+]");
  EXPECT_EQ(g.atoms.size(), 7u);
  EXPECT_EQ(g.bonds.size(), 7u);
  EXPECT_TRUE(g.atoms[0].aromatic);
  EXPECT_EQ(g.atoms[6].element, "N");
  const auto h = parse("C%12CC%12");
  EXPECT_EQ(h.bonds.size(), 3u);
}

TEST(StarSub, PaperExamples) {
  EXPECT_EQ(transform_stars("*NCCCCCC(*)=O", StarStrategy::kSubstitute), "CNCCCCCC(N)=O");
  EXPECT_EQ(transform_stars("*Oc1ccc(CC(*)=O)cc1", StarStrategy::kSubstitute),
            "COc1ccc(CC(O)=O)cc1");
}

TEST(StarSub, OtherStrategies) {
  EXPECT_EQ(transform_stars("*CC*", StarStrategy::kKeep), "*CC*");
  EXPECT_EQ(transform_stars("*CC(*)F", StarStrategy::kSubstitute), "CCC(C)F");
  EXPECT_EQ(transform_stars("*CC(*)F", StarStrategy::kRemove), "CCF");
  EXPECT_EQ(transform_stars("*CC*", StarStrategy::kRemove), "CC");
}

TEST(StarSub, Errors) {
  EXPECT_EQ(code_of([] { transform_stars("*CC", StarStrategy::kSubstitute); }), Errc::kStarCountError);
  EXPECT_EQ(code_of([] { transform_stars("*C(*)C*", StarStrategy::kRemove); }), Errc::kStarCountError);
  EXPECT_EQ(code_of([] { transform_stars("**", StarStrategy::kSubstitute); }), Errc::kAdjacentStarsError);
  EXPECT_NO_THROW(transform_stars("*C(*)C*", StarStrategy::kKeep));
}

TEST(StarSub, Strategies) {
  for (auto s : {"keep", "remove", "substitute"}) EXPECT_EQ(strategy_name(parse_strategy(s)), s);
  EXPECT_THROW(parse_strategy("swap"), Error);
}

// Substitute adds two heavy atoms, Remove keeps the count, both re-parse.
TEST(StarSub, HeavyAtomProperty) {
  Rng rng(3);
  for (const auto &s : synthetic_psmiles(300, rng)) {
    const std::size_t heavy = parse(s).heavy_atom_count();
    const auto sub = transform_stars(s, StarStrategy::kSubstitute);
    const auto rem = transform_stars(s, StarStrategy::kRemove);
    EXPECT_EQ(sub.find('*'), std::string::npos) << s;
    EXPECT_EQ(parse(sub).heavy_atom_count(), heavy + 2) << s;
    EXPECT_EQ(parse(rem).heavy_atom_count(), heavy) << s;
  }
}

TEST(Tokenize, PaperExample) {
  EXPECT_EQ(toks("*CC(*)F"),
            (std::vector<std::string>{"[CLS]", "*", "C", "C", "(", "*", ")", "F", "[SEP]"}));
}

TEST(Tokenize, LongestMatch) {
  EXPECT_EQ(toks("CCl"), (std::vector<std::string>{"[CLS]", "C", "Cl", "[SEP]"}));
  EXPECT_EQ(toks("[Si](C)Br"),
            (std::vector<std::string>{"[CLS]", "[Si]", "(", "C", ")", "Br", "[SEP]"}));
  EXPECT_EQ(toks("C%10CC%10"),
            (std::vector<std::string>{"[CLS]", "C", "%10", "C", "C", "%10", "[SEP]"}));
  EXPECT_THROW(tokenize(""), Error);
  EXPECT_THROW(tokenize("C[NH"), Error);
}

TEST(Tokenize, Detokenize) {
  EXPECT_EQ(detokenize(tokenize("*CC(*)F")), "*CC(*)F");
  EXPECT_EQ(detokenize(tokenize("CCl")), "CCl");
  EXPECT_EQ(code_of([] { detokenize(TokenSequence{{"[CLS]", "[SEP]"}}); }), Errc::kEmptyBody);
}

TEST(Tokenize, RoundTripExoticCorpus) {
  Rng rng(11);
  SyntheticOptions opt;
  opt.exotic_tokens = true;
  for (const auto &s : synthetic_psmiles(500, rng, opt)) EXPECT_EQ(detokenize(tokenize(s)), s);
}

// Writer output keeps the atom multiset and bond count.
TEST(Parse, WriterPreservesGraph) {
  Rng rng(5);
  SyntheticOptions opt;
  opt.exotic_tokens = true;
  for (const auto &s : synthetic_psmiles(200, rng, opt)) {
    const auto g = parse(s);
    const auto h = parse(write_smiles(g));
    auto bag = [](const MolGraph &m) {
      std::map<std::string, int> c;
      for (const auto &a : m.atoms) ++c[a.text];
      return c;
    };
    EXPECT_EQ(bag(g), bag(h)) << s;
    EXPECT_EQ(g.bonds.size(), h.bonds.size()) << s;
  }
}

TEST(Vocabulary, ReservedAndCorpus) {
  const std::vector<std::string> corpus{"*CC*"};
  const auto v = Vocabulary::build(corpus);
  EXPECT_EQ(v.tokens(), (std::vector<std::string>{"[PAD]", "[CLS]", "[SEP]", "[MASK]", "[UNK]", "*", "C"}));
  EXPECT_EQ(v.id("[MASK]"), Vocabulary::kMaskId);
  EXPECT_EQ(v.id("Br"), Vocabulary::kUnkId);
  const auto ids = encode_ids(tokenize("*CBr*"), v);
  EXPECT_EQ(ids, (std::vector<int>{1, 5, 6, 4, 5, 2}));
  const auto w = Vocabulary::build(std::vector<std::string>{"NCO"});
  for (int i = 0; i < Vocabulary::kReservedCount; ++i) EXPECT_EQ(v.token(i), w.token(i));
  EXPECT_EQ(Vocabulary::from_tokens(v.tokens()).tokens(), v.tokens());
  EXPECT_THROW(Vocabulary::from_tokens({"C", "N"}), Error);
}

TEST(Masking, ZeroRate) {
  const auto v = Vocabulary::build(std::vector<std::string>{"*CC(*)F"});
  const auto ids = encode_ids(tokenize("*CC(*)F"), v);
  Rng rng(1);
  const auto m = apply_masking(ids, v, MaskingPolicy{0.0, 0.8, 0.1}, rng);
  EXPECT_TRUE(m.positions.empty());
  EXPECT_EQ(m.input_ids, ids);
}

TEST(Masking, FullRateForcedMask) {
  const auto v = Vocabulary::build(std::vector<std::string>{"*CC(*)F"});
  std::vector<int> ids = encode_ids(tokenize("*CC(*)F"), v);
  ids.push_back(Vocabulary::kPadId);
  Rng rng(1);
  const auto m = apply_masking(ids, v, MaskingPolicy{1.0, 1.0, 0.0}, rng);
  EXPECT_EQ(m.positions, (std::vector<std::size_t>{1, 2, 3, 4, 5, 6, 7}));
  for (std::size_t i = 0; i < m.positions.size(); ++i) {
    EXPECT_EQ(m.input_ids[m.positions[i]], Vocabulary::kMaskId);
    EXPECT_EQ(m.labels[i], ids[m.positions[i]]);
  }
  EXPECT_EQ(m.input_ids[0], Vocabulary::kClsId);
  EXPECT_EQ(m.input_ids[8], Vocabulary::kSepId);
  EXPECT_EQ(m.input_ids[9], Vocabulary::kPadId);
}

TEST(Masking, RandomBranchUsesOrdinaryTokens) {
  const auto v = Vocabulary::build(std::vector<std::string>{"*CC(*)F", "NCO"});
  const auto ids = encode_ids(tokenize("*CC(*)FNCO"), v);
  Rng rng(9);
  for (int rep = 0; rep < 200; ++rep) {
    const auto m = apply_masking(ids, v, MaskingPolicy{1.0, 0.0, 1.0}, rng);
    for (auto p : m.positions) EXPECT_GE(m.input_ids[p], Vocabulary::kReservedCount);
  }
}

TEST(Masking, Deterministic) {
  const auto v = Vocabulary::build(std::vector<std::string>{"*CC(*)FNCO"});
  const auto ids = encode_ids(tokenize("*CC(*)FNCO"), v);
  Rng a(4), b(4);
  const auto ma = apply_masking(ids, v, {}, a);
  const auto mb = apply_masking(ids, v, {}, b);
  EXPECT_EQ(ma.input_ids, mb.input_ids);
  EXPECT_EQ(ma.positions, mb.positions);
}

}  // namespace
}  // namespace mmp::psmiles
