// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "mmpolymer/conformer.hpp"
#include "mmpolymer/error.hpp"
#include "test_util.hpp"

namespace mmp {
namespace {

double dist(const Vec3 &a, const Vec3 &b) { return std::hypot(a[0] - b[0], a[1] - b[1], a[2] - b[2]); }

Errc read_error(const std::string &text) {
  std::istringstream in(text);
  try {
    read_conformers(in);
  } catch (const Error &e) {
    return e.code();
  }
  ADD_FAILURE() << "accepted: " << text;
  return Errc::kConfigError;
}

TEST(AtomTypes, Symbols) {
  EXPECT_EQ(atom_types::from_symbol("C"), 7);
  EXPECT_EQ(atom_types::from_symbol("*"), atom_types::kWildcard);
  EXPECT_EQ(atom_types::symbol(atom_types::from_symbol("Cl")), "Cl");
  EXPECT_THROW(atom_types::from_symbol("Xx"), Error);
}

TEST(Conformers, ReadWellFormed) {
  std::istringstream in(
      R"({"psmiles":"CCCC","atoms":["C","C","C","C"],"coords":[[0,0,0],[1.5,0,0],[3,0,0],[4.5,0,0]]})"
      "\n");
  const auto cs = read_conformers(in);
  ASSERT_EQ(cs.size(), 1u);
  EXPECT_EQ(cs[0].size(), 4u);
  EXPECT_EQ(cs[0].psmiles, "CCCC");
}

TEST(Conformers, Rejections) {
  EXPECT_EQ(read_error(R"({"psmiles":"CC","atoms":["C","C"],"coords":[[0,0,0],[1,0]]})"),
            Errc::kMalformedRecord);
  EXPECT_EQ(read_error(R"({"psmiles":"CC","atoms":["C","C"],"coords":[[0,0,0],[0,0,0]]})"),
            Errc::kInvariantViolation);
  EXPECT_EQ(read_error(R"({"psmiles":"CC","atoms":["C"],"coords":[[0,0,0],[1,0,0]]})"),
            Errc::kMalformedRecord);
  EXPECT_EQ(read_error(R"({"atoms":["C"],"coords":[[0,0,0]]})"), Errc::kMalformedRecord);
  EXPECT_EQ(read_error("not json"), Errc::kMalformedRecord);
}

TEST(Conformers, WriteReadRoundTrip) {
  Rng rng(2);
  std::vector<Conformer> cs{testing::random_conformer(5, rng), chain_embed("CC(=O)OC")};
  std::stringstream io;
  write_conformers(io, cs);
  const auto back = read_conformers(io);
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back[i].atoms, cs[i].atoms);
    EXPECT_EQ(back[i].coords, cs[i].coords);
  }
}

TEST(VirtualAtom, Centroids) {
  const std::vector<std::string> cc{"C", "C"};
  auto v = add_virtual_atom(make_conformer("CC", cc, {{0, 0, 0}, {2, 0, 0}}));
  EXPECT_EQ(v.atoms[0], atom_types::kVirtual);
  EXPECT_EQ(v.coords[0], (Vec3{1, 0, 0}));
  const std::vector<std::string> c{"C"};
  EXPECT_EQ(add_virtual_atom(make_conformer("C", c, {{5, 5, 5}})).coords[0], (Vec3{5, 5, 5}));
  const std::vector<std::string> ccc{"C", "C", "C"};
  const auto t = add_virtual_atom(
      make_conformer("CCC", ccc, {{0, 0, 0}, {1, 0, 0}, {0.5, std::sqrt(3.0) / 2, 0}}));
  EXPECT_NEAR(t.coords[0][0], 0.5, 1e-15);
  EXPECT_NEAR(t.coords[0][1], std::sqrt(3.0) / 6, 1e-15);
}

TEST(VirtualAtom, StripRecoversOriginal) {
  Rng rng(8);
  const auto c = testing::random_conformer(7, rng);
  const auto back = add_virtual_atom(c).strip_virtual();
  EXPECT_EQ(back.atoms, c.atoms);
  EXPECT_EQ(back.coords, c.coords);
}

TEST(Noise, ZeroScaleIsExact) {
  Rng rng(1), nrng(2);
  const auto v = add_virtual_atom(testing::random_conformer(6, rng));
  const auto n = inject_noise(v, 0.0, nrng);
  EXPECT_EQ(n.noisy, v.coords);
}

TEST(Noise, SupportRecenteringAndReproducibility) {
  Rng rng(1);
  const auto v = add_virtual_atom(testing::random_conformer(9, rng));
  Rng a(5), b(5);
  const auto n = inject_noise(v, 1.0, a);
  const auto m = inject_noise(v, 1.0, b);
  EXPECT_EQ(n.noisy, m.noisy);
  Vec3 centroid{};
  for (std::size_t i = 1; i < v.size(); ++i)
    for (int k = 0; k < 3; ++k) {
      EXPECT_LE(std::abs(n.noisy[i][k] - v.coords[i][k]), 1.0);
      EXPECT_EQ(n.noisy[i][k] - v.coords[i][k], n.noise[i][k]);
      centroid[k] += n.noisy[i][k] / static_cast<double>(v.size() - 1);
    }
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(n.noisy[0][k], centroid[k], 1e-12);
}

// Mean |U(-s, s)| = s / 2.
TEST(Noise, MeanMagnitude) {
  const std::vector<std::string> c{"C"};
  const auto v = add_virtual_atom(make_conformer("C", c, {{0, 0, 0}}));
  Rng rng(17);
  double total = 0.0;
  const int draws = 100000;
  for (int i = 0; i < draws / 3 + 1; ++i) {
    const auto n = inject_noise(v, 2.0, rng);
    for (int k = 0; k < 3; ++k) total += std::abs(n.noise[1][k]);
  }
  const double mean = total / (3.0 * (draws / 3 + 1));
  EXPECT_NEAR(mean, 1.0, 0.02);
}

TEST(Distances, Basics) {
  const std::vector<Vec3> p{{0, 0, 0}, {3, 4, 0}};
  const auto d = pair_distances(p);
  EXPECT_EQ(d(0, 1), 5.0);
  EXPECT_EQ(d(1, 0), 5.0);
  EXPECT_EQ(d(0, 0), 0.0);
}

TEST(Distances, RigidMotionInvariance) {
  Rng rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    const auto c = testing::random_conformer(10, rng);
    const auto r = testing::random_rotation(rng);
    const Vec3 t{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
    const auto d0 = pair_distances(c.coords);
    const auto d1 = pair_distances(testing::transform(r, t, c.coords));
    for (std::size_t i = 0; i < d0.size(); ++i) EXPECT_NEAR(d0[i], d1[i], 1e-9);
    for (std::size_t i = 0; i < c.size(); ++i) {
      EXPECT_EQ(d0(i, i), 0.0);
      for (std::size_t j = 0; j < c.size(); ++j) EXPECT_EQ(d0(i, j), d0(j, i));
    }
  }
}

TEST(ChainEmbed, Layout) {
  const auto cc = chain_embed("CC");
  EXPECT_NEAR(dist(cc.coords[0], cc.coords[1]), 1.5, 1e-12);
  const auto a = chain_embed("CCCC");
  const auto b = chain_embed("CCCC");
  EXPECT_EQ(a.coords, b.coords);
  for (std::size_t i = 0; i + 1 < a.size(); ++i) EXPECT_NEAR(dist(a.coords[i], a.coords[i + 1]), 1.5, 1e-12);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) EXPECT_GT(dist(a.coords[i], a.coords[j]), 1e-6);
  EXPECT_NO_THROW(a.validate());
  EXPECT_THROW(chain_embed("CC(C"), Error);
}

}  // namespace
}  // namespace mmp
