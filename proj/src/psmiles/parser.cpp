// Copyright 2026 The MMPolymer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mmpolymer/elements.hpp"
#include "mmpolymer/error.hpp"
#include "mmpolymer/psmiles.hpp"

namespace mmp::psmiles {
namespace {

bool is_bond_char(char c) {
  return c == '-' || c == '=' || c == '#' || c == ':' || c == '/' || c == '\\';
}

BondOrder order_of(char symbol, bool both_aromatic) {
  switch (symbol) {
  case '=': return BondOrder::kDouble;
  case '#': return BondOrder::kTriple;
  case ':': return BondOrder::kAromatic;
  case '\0': return both_aromatic ? BondOrder::kAromatic : BondOrder::kSingle;
  default: return BondOrder::kSingle;
  }
}

std::string upper_first(std::string_view s) {
  std::string out(s);
  if (!out.empty())
    out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

// Parses the element part of an organic-subset atom starting at `pos`.
// Returns the symbol length (1 or 2) or 0 if no atom starts here.
std::size_t organic_atom_length(std::string_view text, std::size_t pos) {
  const char c = text[pos];
  const char next = pos + 1 < text.size() ? text[pos + 1] : '\0';
  if (c == 'C' && next == 'l') return 2;
  if (c == 'B' && next == 'r') return 2;
  if (c == 'S' && (next == 'i' || next == 'e')) return 2;
  switch (c) {
  case 'B': case 'C': case 'N': case 'O': case 'P': case 'S': case 'F':
  case 'I': case 'b': case 'c': case 'n': case 'o': case 'p': case 's':
  case '*':
    return 1;
  default:
    return 0;
  }
}

struct BracketContent {
  std::string element;
  bool aromatic = false;
};

// `inner` is the text between the brackets.
BracketContent parse_bracket(std::string_view inner) {
  std::size_t i = 0;
  while (i < inner.size() && std::isdigit(static_cast<unsigned char>(inner[i])))
    ++i;  // isotope
  if (i >= inner.size())
    throw Error(Errc::kUnknownElement, "empty bracket atom [" + std::string(inner) + "]");
  BracketContent out;
  if (inner[i] == '*') {
    out.element = "*";
    return out;
  }
  const char c = inner[i];
  if (std::isupper(static_cast<unsigned char>(c))) {
    if (i + 1 < inner.size() && std::islower(static_cast<unsigned char>(inner[i + 1]))) {
      const std::string two = std::string{c, inner[i + 1]};
      if (atomic_number(two)) {
        out.element = two;
        return out;
      }
    }
    const std::string one(1, c);
    if (!atomic_number(one))
      throw Error(Errc::kUnknownElement, "unknown element in [" + std::string(inner) + "]");
    out.element = one;
    return out;
  }
  if (std::islower(static_cast<unsigned char>(c))) {
    // aromatic forms allowed in brackets
    for (std::string_view cand : {"se", "as", "te", "b", "c", "n", "o", "p", "s"}) {
      if (inner.substr(i, cand.size()) == cand) {
        out.element = upper_first(cand);
        out.aromatic = true;
        return out;
      }
    }
  }
  throw Error(Errc::kUnknownElement, "unknown element in [" + std::string(inner) + "]");
}

struct RingOpening {
  std::size_t atom;
  char symbol;
};

}  // namespace

std::vector<std::size_t> MolGraph::neighbors(std::size_t atom) const {
  std::vector<std::size_t> out;
  for (const auto &b : bonds) {
    if (b.a == atom) out.push_back(b.b);
    else if (b.b == atom) out.push_back(b.a);
  }
  return out;
}

std::size_t MolGraph::degree(std::size_t atom) const {
  return static_cast<std::size_t>(std::count_if(
      bonds.begin(), bonds.end(),
      [atom](const Bond &b) { return b.a == atom || b.b == atom; }));
}

std::vector<std::size_t> MolGraph::star_indices() const {
  std::vector<std::size_t> out;
  for (const auto &a : atoms)
    if (a.is_star) out.push_back(a.index);
  return out;
}

std::size_t MolGraph::heavy_atom_count() const {
  return static_cast<std::size_t>(std::count_if(
      atoms.begin(), atoms.end(), [](const Atom &a) { return !a.is_star; }));
}

MolGraph parse(std::string_view text) {
  if (text.empty()) throw Error(Errc::kEmptyInput, "empty SMILES");

  MolGraph g;
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::size_t prev = kNone;
  char pending = '\0';
  bool branch_has_atom = true;
  std::vector<std::size_t> branches;
  std::map<int, RingOpening> open_rings;

  auto add_bond = [&](std::size_t a, std::size_t b, char symbol) {
    if (a == b) throw Error(Errc::kDanglingRingBond, "ring bond from an atom to itself");
    for (const auto &e : g.bonds)
      if ((e.a == a && e.b == b) || (e.a == b && e.b == a))
        throw Error(Errc::kDanglingRingBond, "duplicate bond between atoms");
    const bool arom = g.atoms[a].aromatic && g.atoms[b].aromatic;
    g.bonds.push_back({a, b, order_of(symbol, arom), symbol});
  };

  auto add_atom = [&](Atom atom) {
    atom.index = g.atoms.size();
    g.atoms.push_back(std::move(atom));
    const std::size_t idx = g.atoms.size() - 1;
    if (prev != kNone) add_bond(prev, idx, pending);
    pending = '\0';
    prev = idx;
    branch_has_atom = true;
  };

  std::size_t pos = 0;
  while (pos < text.size()) {
    const char c = text[pos];
    if (c == '(') {
      if (prev == kNone)
        throw Error(Errc::kUnbalancedParentheses, "branch opened before any atom");
      if (pending != '\0')
        throw Error(Errc::kInvalidCharacter, "bond symbol before '('");
      branches.push_back(prev);
      branch_has_atom = false;
      ++pos;
    } else if (c == ')') {
      if (branches.empty())
        throw Error(Errc::kUnbalancedParentheses, "unmatched ')' at " + std::to_string(pos));
      if (!branch_has_atom)
        throw Error(Errc::kUnbalancedParentheses, "empty branch at " + std::to_string(pos));
      if (pending != '\0')
        throw Error(Errc::kInvalidCharacter, "dangling bond symbol before ')'");
      prev = branches.back();
      branches.pop_back();
      ++pos;
    } else if (is_bond_char(c)) {
      if (pending != '\0')
        throw Error(Errc::kInvalidCharacter, "consecutive bond symbols at " + std::to_string(pos));
      if (prev == kNone)
        throw Error(Errc::kInvalidCharacter, "bond symbol before any atom");
      pending = c;
      ++pos;
    } else if (c == '.') {
      throw Error(Errc::kDisconnected, "dot-disconnected structures are not polymers");
    } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '%') {
      int label = 0;
      if (c == '%') {
        if (pos + 2 >= text.size() ||
            !std::isdigit(static_cast<unsigned char>(text[pos + 1])) ||
            !std::isdigit(static_cast<unsigned char>(text[pos + 2])))
          throw Error(Errc::kDanglingRingBond, "'%' must be followed by two digits");
        label = (text[pos + 1] - '0') * 10 + (text[pos + 2] - '0');
        pos += 3;
      } else {
        label = c - '0';
        ++pos;
      }
      if (prev == kNone)
        throw Error(Errc::kDanglingRingBond, "ring label before any atom");
      auto it = open_rings.find(label);
      if (it == open_rings.end()) {
        open_rings.emplace(label, RingOpening{prev, pending});
      } else {
        char symbol = pending;
        if (symbol == '\0') symbol = it->second.symbol;
        else if (it->second.symbol != '\0' && it->second.symbol != symbol)
          throw Error(Errc::kDanglingRingBond, "conflicting ring bond symbols");
        add_bond(it->second.atom, prev, symbol);
        open_rings.erase(it);
      }
      pending = '\0';
    } else if (c == '[') {
      const auto close = text.find(']', pos);
      if (close == std::string_view::npos)
        throw Error(Errc::kUnterminatedBracketAtom, "missing ']' for '[' at " + std::to_string(pos));
      const auto inner = text.substr(pos + 1, close - pos - 1);
      const auto content = parse_bracket(inner);
      Atom atom;
      atom.element = content.element;
      atom.aromatic = content.aromatic;
      atom.is_star = content.element == "*";
      atom.bracket = true;
      atom.text = std::string(text.substr(pos, close - pos + 1));
      atom.begin = pos;
      atom.end = close + 1;
      add_atom(std::move(atom));
      pos = close + 1;
    } else if (const auto len = organic_atom_length(text, pos); len > 0) {
      Atom atom;
      const auto sym = text.substr(pos, len);
      atom.text = std::string(sym);
      atom.begin = pos;
      atom.end = pos + len;
      if (sym == "*") {
        atom.element = "*";
        atom.is_star = true;
      } else if (std::islower(static_cast<unsigned char>(sym[0]))) {
        atom.element = upper_first(sym);
        atom.aromatic = true;
      } else {
        atom.element = std::string(sym);
      }
      add_atom(std::move(atom));
      pos += len;
    } else if (std::isalpha(static_cast<unsigned char>(c))) {
      throw Error(Errc::kUnknownElement,
                  "'" + std::string(1, c) + "' at " + std::to_string(pos) +
                      " is not an organic-subset element");
    } else {
      throw Error(Errc::kInvalidCharacter,
                  "unexpected '" + std::string(1, c) + "' at " + std::to_string(pos));
    }
  }

  if (!branches.empty()) throw Error(Errc::kUnbalancedParentheses, "unclosed '('");
  if (!open_rings.empty())
    throw Error(Errc::kDanglingRingBond,
                "ring label " + std::to_string(open_rings.begin()->first) + " never closed");
  if (pending != '\0') throw Error(Errc::kInvalidCharacter, "trailing bond symbol");
  if (g.atoms.empty()) throw Error(Errc::kEmptyInput, "no atoms");

  for (const auto &a : g.atoms) {
    if (a.is_star && g.degree(a.index) != 1)
      throw Error(Errc::kStarDegreeError,
                  "'*' at " + std::to_string(a.begin) + " has degree " +
                      std::to_string(g.degree(a.index)));
  }
  return g;
}

std::string write_smiles(const MolGraph &graph) {
  const std::size_t n = graph.atoms.size();
  if (n == 0) return {};

  // adjacency with bond index, neighbors ascending
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(n);
  for (std::size_t e = 0; e < graph.bonds.size(); ++e) {
    adj[graph.bonds[e].a].push_back({graph.bonds[e].b, e});
    adj[graph.bonds[e].b].push_back({graph.bonds[e].a, e});
  }
  for (auto &v : adj) std::sort(v.begin(), v.end());

  // Spanning forest by DFS; remaining edges become ring closures.
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::size_t> order(n, kNone);
  std::vector<std::vector<std::size_t>> children(n);
  std::vector<std::size_t> parent_edge(n, kNone);
  std::vector<bool> tree_edge(graph.bonds.size(), false);
  std::vector<std::size_t> roots;
  std::size_t counter = 0;
  for (std::size_t root = 0; root < n; ++root) {
    if (order[root] != kNone) continue;
    roots.push_back(root);
    std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
    order[root] = counter++;
    while (!stack.empty()) {
      auto &[u, k] = stack.back();
      if (k == adj[u].size()) {
        stack.pop_back();
        continue;
      }
      const auto [v, e] = adj[u][k++];
      if (order[v] != kNone) continue;
      order[v] = counter++;
      tree_edge[e] = true;
      parent_edge[v] = e;
      children[u].push_back(v);
      stack.push_back({v, 0});
    }
  }

  // ring closures listed at each endpoint
  std::vector<std::vector<std::size_t>> ring_edges(n);
  for (std::size_t e = 0; e < graph.bonds.size(); ++e) {
    if (tree_edge[e]) continue;
    ring_edges[graph.bonds[e].a].push_back(e);
    ring_edges[graph.bonds[e].b].push_back(e);
  }

  std::vector<int> edge_label(graph.bonds.size(), -1);
  std::vector<bool> label_used(100, false);
  std::string out;

  auto bond_text = [&](std::size_t e) {
    const char s = graph.bonds[e].symbol;
    return s == '\0' ? std::string() : std::string(1, s);
  };
  auto label_text = [](int label) {
    return label < 10 ? std::to_string(label) : "%" + std::to_string(label);
  };

  // explicit stack to emit atoms in DFS order with branches
  struct Frame {
    std::size_t atom;
    std::size_t next_child;
  };
  for (std::size_t ri = 0; ri < roots.size(); ++ri) {
    if (ri > 0) out += '.';
    auto emit_atom = [&](std::size_t u) {
      out += graph.atoms[u].text;
      for (std::size_t e : ring_edges[u]) {
        if (edge_label[e] < 0) {
          int label = 1;
          while (label_used[label]) ++label;
          label_used[label] = true;
          edge_label[e] = label;
          out += bond_text(e) + label_text(label);
        } else {
          out += label_text(edge_label[e]);
          label_used[edge_label[e]] = false;
        }
      }
    };
    std::vector<Frame> stack;
    emit_atom(roots[ri]);
    stack.push_back({roots[ri], 0});
    while (!stack.empty()) {
      Frame &f = stack.back();
      const auto &kids = children[f.atom];
      if (f.next_child == kids.size()) {
        stack.pop_back();
        if (!stack.empty()) {
          const Frame &parent = stack.back();
          // close the branch unless this was the parent's last child
          if (parent.next_child != children[parent.atom].size()) out += ')';
        }
        continue;
      }
      const std::size_t v = kids[f.next_child++];
      const bool last = f.next_child == kids.size();
      if (!last) out += '(';
      out += bond_text(parent_edge[v]);
      emit_atom(v);
      stack.push_back({v, 0});
    }
  }
  return out;
}

}  // namespace mmp::psmiles
