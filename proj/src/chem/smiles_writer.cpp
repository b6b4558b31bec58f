#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <functional>
#include <set>

#include "molexplain/chem.hpp"

namespace molexplain::chem {
namespace {

bool organic_subset(int element) {
  switch (element) {
    case 5: case 6: case 7: case 8: case 9: case 15: case 16: case 17: case 35: case 53:
      return true;
    default:
      return false;
  }
}

std::string atom_text(const MolecularGraph& g, int v, bool hydrogens) {
  const Atom& a = g.atom(v);
  std::string symbol(element_symbol(a.element));
  if (a.aromatic) symbol[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(symbol[0])));
  bool bare = organic_subset(a.element) && a.formal_charge == 0;
  if (bare && hydrogens) {
    const std::optional<int> h = default_implicit_h(g, v);
    bare = h && *h == a.implicit_h;
  }
  if (bare) return symbol;
  std::string out = "[" + symbol;
  if (hydrogens && a.implicit_h > 0) {
    out += 'H';
    if (a.implicit_h > 1) out += std::to_string(a.implicit_h);
  }
  if (a.formal_charge != 0) {
    out += a.formal_charge > 0 ? '+' : '-';
    const int mag = std::abs(a.formal_charge);
    if (mag > 1) out += std::to_string(mag);
  }
  out += ']';
  return out;
}

std::string bond_text(const MolecularGraph& g, const Bond& b) {
  const bool both_aromatic = g.atom(b.begin).aromatic && g.atom(b.end).aromatic;
  switch (b.order) {
    case BondOrder::Single: return both_aromatic ? "-" : "";
    case BondOrder::Double: return "=";
    case BondOrder::Triple: return "#";
    case BondOrder::Aromatic: return both_aromatic ? "" : ":";
  }
  return "";
}

std::string ring_digit(int d) { return d < 10 ? std::to_string(d) : "%" + std::to_string(d); }

}  // namespace

std::string to_smiles(const MolecularGraph& g, const SmilesOptions& options) {
  const int n = static_cast<int>(g.atom_count());
  if (n == 0) return "";
  const std::vector<int> rank = canonical_ranks(g);

  auto sorted_neighbors = [&](int v) {
    std::vector<Neighbor> nbrs(g.neighbors(v).begin(), g.neighbors(v).end());
    std::sort(nbrs.begin(), nbrs.end(), [&](const Neighbor& x, const Neighbor& y) {
      return rank[static_cast<std::size_t>(x.atom)] < rank[static_cast<std::size_t>(y.atom)];
    });
    return nbrs;
  };

  // Pass 1: DFS tree in rank order; non-tree bonds become ring closures.
  std::vector<bool> visited(static_cast<std::size_t>(n), false);
  std::vector<bool> tree_bond(g.bond_count(), false);
  std::vector<std::vector<Neighbor>> children(static_cast<std::size_t>(n));
  std::vector<int> order_of(static_cast<std::size_t>(n), -1);
  std::vector<int> roots;
  int counter = 0;
  std::function<void(int)> dfs = [&](int v) {
    visited[static_cast<std::size_t>(v)] = true;
    order_of[static_cast<std::size_t>(v)] = counter++;
    for (const Neighbor& nb : sorted_neighbors(v)) {
      if (visited[static_cast<std::size_t>(nb.atom)]) continue;
      tree_bond[static_cast<std::size_t>(nb.bond)] = true;
      children[static_cast<std::size_t>(v)].push_back(nb);
      dfs(nb.atom);
    }
  };
  std::vector<int> by_rank(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) by_rank[static_cast<std::size_t>(rank[static_cast<std::size_t>(v)])] = v;
  for (int v : by_rank) {
    if (!visited[static_cast<std::size_t>(v)]) {
      roots.push_back(v);
      dfs(v);
    }
  }

  // Pass 2: emit. Ring bonds open at the endpoint visited first.
  std::vector<int> digit_of_bond(g.bond_count(), -1);
  std::set<int> free_digits;
  for (int d = 1; d < 100; ++d) free_digits.insert(d);
  std::string out;
  std::function<void(int)> emit = [&](int v) {
    out += atom_text(g, v, options.hydrogens);
    std::vector<Neighbor> closings;
    std::vector<Neighbor> openings;
    for (const Neighbor& nb : sorted_neighbors(v)) {
      if (tree_bond[static_cast<std::size_t>(nb.bond)]) continue;
      if (order_of[static_cast<std::size_t>(nb.atom)] < order_of[static_cast<std::size_t>(v)]) {
        closings.push_back(nb);
      } else {
        openings.push_back(nb);
      }
    }
    for (const Neighbor& nb : closings) {
      const int d = digit_of_bond[static_cast<std::size_t>(nb.bond)];
      out += bond_text(g, g.bond(nb.bond)) + ring_digit(d);
      free_digits.insert(d);
    }
    for (const Neighbor& nb : openings) {
      const int d = *free_digits.begin();
      free_digits.erase(free_digits.begin());
      digit_of_bond[static_cast<std::size_t>(nb.bond)] = d;
      out += ring_digit(d);
    }
    const auto& kids = children[static_cast<std::size_t>(v)];
    for (std::size_t i = 0; i < kids.size(); ++i) {
      const bool last = i + 1 == kids.size();
      if (!last) out += '(';
      out += bond_text(g, g.bond(kids[i].bond));
      emit(kids[i].atom);
      if (!last) out += ')';
    }
  };
  for (std::size_t r = 0; r < roots.size(); ++r) {
    if (r > 0) out += '.';
    emit(roots[r]);
  }
  return out;
}

bool isomorphic(const MolecularGraph& a, const MolecularGraph& b) {
  if (a.atom_count() != b.atom_count() || a.bond_count() != b.bond_count()) return false;
  return to_smiles(a) == to_smiles(b);
}

}  // namespace molexplain::chem
