// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmpolymer/conformer.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "mmpolymer/elements.hpp"
#include "mmpolymer/error.hpp"
#include "mmpolymer/psmiles.hpp"

namespace mmp {

namespace atom_types {

int from_symbol(std::string_view symbol) {
  if (symbol == "*") return kWildcard;
  const auto z = atomic_number(symbol);
  if (!z || *z > kMaxAtomicNumber)
    throw Error(Errc::kUnknownAtomType, "no atom type for '" + std::string(symbol) + "'");
  return *z + 1;
}

std::string symbol(int type) {
  if (type == kVirtual) return "VIRT";
  if (type == kWildcard) return "*";
  if (type < 0 || type >= kCount)
    throw Error(Errc::kUnknownAtomType, "atom type id " + std::to_string(type));
  return std::string(element_symbol(type - 1));
}

}  // namespace atom_types

namespace {

constexpr double kMinSeparation = 1e-6;

Vec3 centroid(std::span<const Vec3> pts) {
  Vec3 c{0.0, 0.0, 0.0};
  for (const auto &p : pts)
    for (int k = 0; k < 3; ++k) c[k] += p[k];
  for (int k = 0; k < 3; ++k) c[k] /= static_cast<double>(pts.size());
  return c;
}

double distance(const Vec3 &a, const Vec3 &b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace

void Conformer::validate() const {
  if (atoms.empty()) throw Error(Errc::kInvariantViolation, "conformer has no atoms");
  if (atoms.size() != coords.size())
    throw Error(Errc::kMalformedRecord, std::to_string(atoms.size()) + " atoms but " +
                                            std::to_string(coords.size()) + " coordinate rows");
  for (int t : atoms)
    if (t <= atom_types::kVirtual || t >= atom_types::kCount)
      throw Error(Errc::kUnknownAtomType, "atom type id " + std::to_string(t));
  for (const auto &p : coords)
    for (double v : p)
      if (!std::isfinite(v)) throw Error(Errc::kInvariantViolation, "non-finite coordinate");
  for (std::size_t i = 0; i < coords.size(); ++i)
    for (std::size_t j = i + 1; j < coords.size(); ++j)
      if (distance(coords[i], coords[j]) <= kMinSeparation)
        throw Error(Errc::kInvariantViolation, "atoms " + std::to_string(i) + " and " +
                                                   std::to_string(j) + " overlap");
}

Conformer VirtualizedConformer::strip_virtual() const {
  Conformer c;
  c.psmiles = psmiles;
  c.atoms.assign(atoms.begin() + 1, atoms.end());
  c.coords.assign(coords.begin() + 1, coords.end());
  return c;
}

VirtualizedConformer NoisyConformer::noisy_conformer() const {
  VirtualizedConformer v = clean;
  v.coords = noisy;
  return v;
}

Conformer make_conformer(std::string psmiles, std::span<const std::string> symbols,
                         std::vector<Vec3> coords) {
  Conformer c;
  c.psmiles = std::move(psmiles);
  c.atoms.reserve(symbols.size());
  for (const auto &s : symbols) c.atoms.push_back(atom_types::from_symbol(s));
  c.coords = std::move(coords);
  c.validate();
  return c;
}

std::vector<Conformer> read_conformers(std::istream &in) {
  using nlohmann::json;
  std::vector<Conformer> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(lineno) + ": ";
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error &e) {
      throw Error(Errc::kMalformedRecord, where + e.what());
    }
    if (!rec.is_object() || !rec.contains("psmiles") || !rec.contains("atoms") ||
        !rec.contains("coords"))
      throw Error(Errc::kMalformedRecord, where + "expected psmiles, atoms and coords");
    if (!rec["psmiles"].is_string() || !rec["atoms"].is_array() || !rec["coords"].is_array())
      throw Error(Errc::kMalformedRecord, where + "field of the wrong type");
    std::vector<std::string> symbols;
    for (const auto &a : rec["atoms"]) {
      if (!a.is_string()) throw Error(Errc::kMalformedRecord, where + "atom symbol not a string");
      symbols.push_back(a.get<std::string>());
    }
    std::vector<Vec3> coords;
    for (const auto &row : rec["coords"]) {
      if (!row.is_array() || row.size() != 3)
        throw Error(Errc::kMalformedRecord, where + "coordinate rows must have 3 entries");
      Vec3 p{};
      for (std::size_t k = 0; k < 3; ++k) {
        if (!row[k].is_number())
          throw Error(Errc::kMalformedRecord, where + "coordinate is not a number");
        p[k] = row[k].get<double>();
      }
      coords.push_back(p);
    }
    if (symbols.size() != coords.size())
      throw Error(Errc::kMalformedRecord, where + "atoms and coords differ in length");
    try {
      out.push_back(make_conformer(rec["psmiles"].get<std::string>(), symbols, std::move(coords)));
    } catch (const Error &e) {
      throw Error(e.code(), where + e.what());
    }
  }
  return out;
}

std::vector<Conformer> load_conformers(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIoError, "cannot open conformer file " + path);
  return read_conformers(in);
}

void write_conformers(std::ostream &out, std::span<const Conformer> conformers) {
  using nlohmann::json;
  for (const auto &c : conformers) {
    json rec;
    rec["psmiles"] = c.psmiles;
    json atoms = json::array();
    for (int t : c.atoms) atoms.push_back(atom_types::symbol(t));
    rec["atoms"] = std::move(atoms);
    json coords = json::array();
    for (const auto &p : c.coords) coords.push_back({p[0], p[1], p[2]});
    rec["coords"] = std::move(coords);
    out << rec.dump() << '\n';
  }
}

VirtualizedConformer add_virtual_atom(const Conformer &conformer) {
  VirtualizedConformer v;
  v.psmiles = conformer.psmiles;
  v.atoms.reserve(conformer.size() + 1);
  v.atoms.push_back(atom_types::kVirtual);
  v.atoms.insert(v.atoms.end(), conformer.atoms.begin(), conformer.atoms.end());
  v.coords.reserve(conformer.size() + 1);
  v.coords.push_back(centroid(conformer.coords));
  v.coords.insert(v.coords.end(), conformer.coords.begin(), conformer.coords.end());
  return v;
}

NoisyConformer inject_noise(const VirtualizedConformer &conformer, double scale, Rng &rng) {
  if (!(scale >= 0.0)) throw Error(Errc::kConfigError, "noise scale must be >= 0");
  NoisyConformer out;
  out.clean = conformer;
  out.noisy = conformer.coords;
  out.noise.assign(conformer.size(), Vec3{0.0, 0.0, 0.0});
  for (std::size_t i = 1; i < conformer.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      const double d = scale == 0.0 ? 0.0 : rng.uniform(-scale, scale);
      out.noisy[i][k] += d;
      out.noise[i][k] = out.noisy[i][k] - conformer.coords[i][k];
    }
  }
  if (conformer.size() > 1) {
    out.noisy[0] = centroid(std::span<const Vec3>(out.noisy).subspan(1));
    for (int k = 0; k < 3; ++k) out.noise[0][k] = out.noisy[0][k] - conformer.coords[0][k];
  }
  return out;
}

Tensor pair_distances(std::span<const Vec3> coords) {
  const std::size_t n = coords.size();
  Tensor d = Tensor::matrix(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = distance(coords[i], coords[j]);
      d[i * n + j] = v;
      d[j * n + i] = v;
    }
  return d;
}

Conformer chain_embed(std::string_view psmiles) {
  const auto graph = psmiles::parse(psmiles);
  Conformer c;
  c.psmiles = std::string(psmiles);
  Vec3 pos{0.0, 0.0, 0.0};
  for (std::size_t k = 0; k < graph.atoms.size(); ++k) {
    c.atoms.push_back(atom_types::from_symbol(graph.atoms[k].element));
    if (k > 0) {
      // x always advances, so no two atoms coincide
      const double y = (k % 2 == 0) ? 0.42 : -0.42;
      const double z = ((k / 2) % 2 == 0) ? 0.3 : -0.3;
      const double x = std::sqrt(1.0 - y * y - z * z);
      pos[0] += kChainStep * x;
      pos[1] += kChainStep * y;
      pos[2] += kChainStep * z;
    }
    c.coords.push_back(pos);
  }
  c.validate();
  return c;
}

}  // namespace mmp
