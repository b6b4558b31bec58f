#include <algorithm>
#include <array>
#include <functional>
#include <map>
#include <numeric>
#include <queue>
#include <set>

#include "molexplain/chem.hpp"

namespace molexplain::chem {

int MolecularGraph::add_atom(const Atom& atom) {
  atoms_.push_back(atom);
  adjacency_.emplace_back();
  return static_cast<int>(atoms_.size()) - 1;
}

int MolecularGraph::add_bond(int a, int b, BondOrder order) {
  const int n = static_cast<int>(atoms_.size());
  if (a < 0 || b < 0 || a >= n || b >= n) throw UserError("bond endpoint out of range");
  if (a == b) throw UserError("self-loop bond on atom " + std::to_string(a));
  if (find_bond(a, b) >= 0) {
    throw UserError("duplicate bond between atoms " + std::to_string(a) + " and " + std::to_string(b));
  }
  const int index = static_cast<int>(bonds_.size());
  bonds_.push_back(Bond{a, b, order, false});
  adjacency_[static_cast<std::size_t>(a)].push_back({b, index});
  adjacency_[static_cast<std::size_t>(b)].push_back({a, index});
  return index;
}

int MolecularGraph::find_bond(int a, int b) const {
  for (const Neighbor& nb : adjacency_[static_cast<std::size_t>(a)]) {
    if (nb.atom == b) return nb.bond;
  }
  return -1;
}

int MolecularGraph::bond_valence(int i) const {
  int sum = 0;
  for (const Neighbor& nb : neighbors(i)) sum += valence_contribution(bonds_[static_cast<std::size_t>(nb.bond)].order);
  return sum;
}

bool MolecularGraph::has_aromatic_bond(int i) const {
  for (const Neighbor& nb : neighbors(i)) {
    if (bonds_[static_cast<std::size_t>(nb.bond)].order == BondOrder::Aromatic) return true;
  }
  return false;
}

void MolecularGraph::perceive_rings() {
  const int n = static_cast<int>(atoms_.size());
  std::vector<int> disc(static_cast<std::size_t>(n), -1);
  std::vector<int> low(static_cast<std::size_t>(n), 0);
  std::vector<bool> bridge(bonds_.size(), false);
  int timer = 0;

  std::function<void(int, int)> visit = [&](int v, int parent_bond) {
    disc[static_cast<std::size_t>(v)] = low[static_cast<std::size_t>(v)] = timer++;
    for (const Neighbor& nb : neighbors(v)) {
      if (nb.bond == parent_bond) continue;
      const auto w = static_cast<std::size_t>(nb.atom);
      if (disc[w] < 0) {
        visit(nb.atom, nb.bond);
        low[static_cast<std::size_t>(v)] = std::min(low[static_cast<std::size_t>(v)], low[w]);
        if (low[w] > disc[static_cast<std::size_t>(v)]) bridge[static_cast<std::size_t>(nb.bond)] = true;
      } else {
        low[static_cast<std::size_t>(v)] = std::min(low[static_cast<std::size_t>(v)], disc[w]);
      }
    }
  };
  for (int v = 0; v < n; ++v) {
    if (disc[static_cast<std::size_t>(v)] < 0) visit(v, -1);
  }

  for (Atom& a : atoms_) a.ring_member = false;
  for (std::size_t b = 0; b < bonds_.size(); ++b) {
    bonds_[b].ring = !bridge[b];
    if (bonds_[b].ring) {
      atoms_[static_cast<std::size_t>(bonds_[b].begin)].ring_member = true;
      atoms_[static_cast<std::size_t>(bonds_[b].end)].ring_member = true;
    }
  }
}

void MolecularGraph::check_invariants() const {
  const int n = static_cast<int>(atoms_.size());
  if (adjacency_.size() != atoms_.size()) throw InvariantError("adjacency size mismatch");
  std::set<std::pair<int, int>> pairs;
  for (std::size_t b = 0; b < bonds_.size(); ++b) {
    const Bond& bond = bonds_[b];
    if (bond.begin < 0 || bond.end < 0 || bond.begin >= n || bond.end >= n) {
      throw InvariantError("bond endpoint out of range");
    }
    if (bond.begin == bond.end) throw InvariantError("self-loop");
    if (!pairs.insert({std::min(bond.begin, bond.end), std::max(bond.begin, bond.end)}).second) {
      throw InvariantError("duplicate bond");
    }
  }
  for (int v = 0; v < n; ++v) {
    for (const Neighbor& nb : neighbors(v)) {
      if (nb.bond < 0 || nb.bond >= static_cast<int>(bonds_.size())) throw InvariantError("dangling bond index");
      const Bond& bond = bonds_[static_cast<std::size_t>(nb.bond)];
      if (bond.other(v) != nb.atom) throw InvariantError("adjacency disagrees with bond");
      bool back = false;
      for (const Neighbor& rev : neighbors(nb.atom)) back = back || (rev.atom == v && rev.bond == nb.bond);
      if (!back) throw InvariantError("asymmetric adjacency");
    }
  }
}

std::optional<int> default_implicit_h(const MolecularGraph& g, int i) {
  const Atom& a = g.atom(i);
  int sum = g.bond_valence(i);
  if (a.aromatic) {
    const bool pi = g.has_aromatic_bond(i);
    switch (a.element) {
      case 7:
      case 15:
        if (sum > 3 + (a.element == 15 ? 2 : 0)) return std::nullopt;
        return std::max(0, 3 - sum - (pi ? 1 : 0));
      case 8:
      case 16:
        if (sum > (a.element == 8 ? 2 : 6)) return std::nullopt;
        return 0;
      default:
        if (pi) sum += 1;
        break;
    }
  }
  for (int v : allowed_valences(a.element, a.formal_charge)) {
    if (v >= sum) return v - sum;
  }
  return std::nullopt;
}

void perceive_aromaticity(MolecularGraph& g) {
  const int n = static_cast<int>(g.atom_count());
  auto eligible = [&](int v) {
    const Atom& a = g.atom(v);
    return !a.aromatic && (a.element == 6 || a.element == 7);
  };
  std::set<std::vector<int>> seen;
  std::vector<std::vector<int>> rings;  // bond indices
  std::vector<int> path_atoms;
  std::vector<int> path_bonds;

  std::function<void(int, int)> extend = [&](int start, int v) {
    for (const Neighbor& nb : g.neighbors(v)) {
      const Bond& bond = g.bond(nb.bond);
      if (bond.order != BondOrder::Single && bond.order != BondOrder::Double) continue;
      if (!path_bonds.empty() && bond.order == g.bond(path_bonds.back()).order) continue;
      if (nb.atom == start && path_atoms.size() == 6) {
        if (bond.order == g.bond(path_bonds.front()).order) continue;
        std::vector<int> key = path_bonds;
        key.push_back(nb.bond);
        std::sort(key.begin(), key.end());
        if (seen.insert(key).second) rings.push_back(key);
        continue;
      }
      if (path_atoms.size() >= 6 || nb.atom <= start || !eligible(nb.atom)) continue;
      if (std::find(path_atoms.begin(), path_atoms.end(), nb.atom) != path_atoms.end()) continue;
      path_atoms.push_back(nb.atom);
      path_bonds.push_back(nb.bond);
      extend(start, nb.atom);
      path_atoms.pop_back();
      path_bonds.pop_back();
    }
  };
  for (int s = 0; s < n; ++s) {
    if (!eligible(s)) continue;
    path_atoms.assign(1, s);
    path_bonds.clear();
    extend(s, s);
  }
  for (const auto& ring : rings) {
    for (int b : ring) {
      Bond& bond = g.bond(b);
      bond.order = BondOrder::Aromatic;
      g.atom(bond.begin).aromatic = true;
      g.atom(bond.end).aromatic = true;
    }
  }
}

MolecularGraph permute_atoms(const MolecularGraph& g, std::span<const int> new_index) {
  const std::size_t n = g.atom_count();
  if (new_index.size() != n) throw UserError("permutation length mismatch");
  std::vector<int> old_of(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    const int t = new_index[i];
    if (t < 0 || static_cast<std::size_t>(t) >= n || old_of[static_cast<std::size_t>(t)] >= 0) {
      throw UserError("not a permutation");
    }
    old_of[static_cast<std::size_t>(t)] = static_cast<int>(i);
  }
  MolecularGraph out;
  for (std::size_t t = 0; t < n; ++t) out.add_atom(g.atom(old_of[t]));
  for (const Bond& b : g.bonds()) {
    const int nb = out.add_bond(new_index[static_cast<std::size_t>(b.begin)], new_index[static_cast<std::size_t>(b.end)], b.order);
    out.bond(nb).ring = b.ring;
  }
  return out;
}

std::vector<int> atoms_within(const MolecularGraph& g, int center, int radius) {
  std::vector<int> dist(g.atom_count(), -1);
  std::queue<int> queue;
  dist[static_cast<std::size_t>(center)] = 0;
  queue.push(center);
  std::vector<int> out;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop();
    out.push_back(v);
    if (dist[static_cast<std::size_t>(v)] == radius) continue;
    for (const Neighbor& nb : g.neighbors(v)) {
      if (dist[static_cast<std::size_t>(nb.atom)] < 0) {
        dist[static_cast<std::size_t>(nb.atom)] = dist[static_cast<std::size_t>(v)] + 1;
        queue.push(nb.atom);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

MolecularGraph induced_subgraph(const MolecularGraph& g, std::span<const int> atoms) {
  std::vector<int> local(g.atom_count(), -1);
  MolecularGraph out;
  for (int v : atoms) local[static_cast<std::size_t>(v)] = out.add_atom(g.atom(v));
  for (const Bond& b : g.bonds()) {
    const int u = local[static_cast<std::size_t>(b.begin)];
    const int w = local[static_cast<std::size_t>(b.end)];
    if (u >= 0 && w >= 0) {
      const int nb = out.add_bond(u, w, b.order);
      out.bond(nb).ring = b.ring;
    }
  }
  return out;
}

int component_count(const MolecularGraph& g) {
  std::vector<int> label(g.atom_count(), -1);
  int count = 0;
  for (std::size_t s = 0; s < g.atom_count(); ++s) {
    if (label[s] >= 0) continue;
    std::vector<int> stack{static_cast<int>(s)};
    label[s] = count;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (const Neighbor& nb : g.neighbors(v)) {
        if (label[static_cast<std::size_t>(nb.atom)] < 0) {
          label[static_cast<std::size_t>(nb.atom)] = count;
          stack.push_back(nb.atom);
        }
      }
    }
    ++count;
  }
  return count;
}

namespace {

// Dense re-ranking of keys; returns number of distinct classes.
template <class Key>
int rank_by(const std::vector<Key>& keys, std::vector<int>& ranks) {
  std::vector<Key> sorted = keys;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    ranks[i] = static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), keys[i]) - sorted.begin());
  }
  return static_cast<int>(sorted.size());
}

int refine(const MolecularGraph& g, std::vector<int>& ranks) {
  const std::size_t n = g.atom_count();
  int classes = static_cast<int>(std::set<int>(ranks.begin(), ranks.end()).size());
  while (true) {
    std::vector<std::vector<int>> keys(n);
    for (std::size_t v = 0; v < n; ++v) {
      std::vector<int> nbrs;
      for (const Neighbor& nb : g.neighbors(static_cast<int>(v))) {
        nbrs.push_back(ranks[static_cast<std::size_t>(nb.atom)] * 8 + static_cast<int>(g.bond(nb.bond).order));
      }
      std::sort(nbrs.begin(), nbrs.end());
      keys[v].push_back(ranks[v]);
      keys[v].insert(keys[v].end(), nbrs.begin(), nbrs.end());
    }
    std::vector<int> next(n);
    const int next_classes = rank_by(keys, next);
    ranks = std::move(next);
    if (next_classes == classes) return classes;
    classes = next_classes;
  }
}

}  // namespace

std::vector<int> canonical_ranks(const MolecularGraph& g) {
  const std::size_t n = g.atom_count();
  std::vector<std::array<int, 6>> init(n);
  for (std::size_t v = 0; v < n; ++v) {
    const Atom& a = g.atom(static_cast<int>(v));
    init[v] = {g.degree(static_cast<int>(v)), a.element, a.aromatic ? 1 : 0, a.formal_charge, a.implicit_h,
               a.ring_member ? 1 : 0};
  }
  std::vector<int> ranks(n);
  rank_by(init, ranks);
  int classes = refine(g, ranks);
  while (classes < static_cast<int>(n)) {
    // Break the lowest tie: the first atom of the smallest tied class is
    // moved ahead of its twins, then refinement propagates the choice.
    std::map<int, int> count;
    for (int r : ranks) ++count[r];
    int tied = -1;
    for (const auto& [r, c] : count) {
      if (c > 1) {
        tied = r;
        break;
      }
    }
    bool moved = false;
    for (std::size_t v = 0; v < n; ++v) {
      ranks[v] *= 2;
      if (!moved && ranks[v] == 2 * tied) {
        ranks[v] -= 1;
        moved = true;
      }
    }
    std::vector<int> dense(n);
    rank_by(ranks, dense);
    ranks = std::move(dense);
    classes = refine(g, ranks);
  }
  return ranks;
}

}  // namespace molexplain::chem
