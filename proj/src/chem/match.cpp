#include <algorithm>
#include <set>

#include "molexplain/pattern.hpp"

namespace molexplain::chem {

bool AtomConstraint::accepts(const MolecularGraph& g, int i) const {
  const Atom& a = g.atom(i);
  if (element && *element != a.element) return false;
  if (aromatic && *aromatic != a.aromatic) return false;
  if (h_count && *h_count != a.implicit_h) return false;
  if (connectivity && *connectivity != g.degree(i) + a.implicit_h) return false;
  if (in_ring && *in_ring != a.ring_member) return false;
  if (formal_charge && *formal_charge != a.formal_charge) return false;
  return true;
}

bool bond_accepts(BondConstraint c, BondOrder order) {
  switch (c) {
    case BondConstraint::Single: return order == BondOrder::Single;
    case BondConstraint::Double: return order == BondOrder::Double;
    case BondConstraint::Triple: return order == BondOrder::Triple;
    case BondConstraint::Aromatic: return order == BondOrder::Aromatic;
    case BondConstraint::SingleOrAromatic: return order == BondOrder::Single || order == BondOrder::Aromatic;
    case BondConstraint::Any: return true;
  }
  return false;
}

namespace {

class Matcher {
 public:
  Matcher(const Pattern& p, const MolecularGraph& g, MatchMode mode, bool first_only)
      : p_(p), g_(g), mode_(mode), first_only_(first_only) {
    const std::size_t n = p.node_count();
    // Visit order: BFS from node 0 so every later node has an earlier
    // neighbour whose image constrains its candidates.
    std::vector<bool> seen(n, false);
    order_.push_back(0);
    seen[0] = true;
    parent_.push_back({-1, -1});
    for (std::size_t head = 0; head < order_.size(); ++head) {
      const int v = order_[head];
      for (const auto& [w, e] : p.incident(v)) {
        if (!seen[static_cast<std::size_t>(w)]) {
          seen[static_cast<std::size_t>(w)] = true;
          order_.push_back(w);
          parent_.push_back({v, e});
        }
      }
    }
    map_.assign(n, -1);
    used_.assign(g.atom_count(), false);
  }

  std::vector<AtomMapping> run() {
    if (p_.node_count() <= g_.atom_count()) extend(0);
    return std::move(results_);
  }

 private:
  bool consistent(int node, int atom) const {
    if (used_[static_cast<std::size_t>(atom)]) return false;
    if (!p_.nodes()[static_cast<std::size_t>(node)].accepts(g_, atom)) return false;
    for (const auto& [other, e] : p_.incident(node)) {
      const int image = map_[static_cast<std::size_t>(other)];
      if (image < 0) continue;
      const int bond = g_.find_bond(atom, image);
      if (bond < 0 || !bond_accepts(p_.edges()[static_cast<std::size_t>(e)].bond, g_.bond(bond).order)) return false;
    }
    return true;
  }

  bool done() const { return first_only_ && !results_.empty(); }

  void record() {
    if (mode_ == MatchMode::UniqueAtomSets) {
      std::vector<int> key = map_;
      std::sort(key.begin(), key.end());
      if (!seen_sets_.insert(key).second) return;
    }
    results_.push_back(map_);
  }

  void assign(std::size_t depth, int node, int atom) {
    map_[static_cast<std::size_t>(node)] = atom;
    used_[static_cast<std::size_t>(atom)] = true;
    extend(depth + 1);
    used_[static_cast<std::size_t>(atom)] = false;
    map_[static_cast<std::size_t>(node)] = -1;
  }

  void extend(std::size_t depth) {
    if (done()) return;
    if (depth == order_.size()) {
      record();
      return;
    }
    const int node = order_[depth];
    const int parent = parent_[depth].first;
    if (parent < 0) {
      for (int a = 0; a < static_cast<int>(g_.atom_count()) && !done(); ++a) {
        if (consistent(node, a)) assign(depth, node, a);
      }
      return;
    }
    for (const Neighbor& nb : g_.neighbors(map_[static_cast<std::size_t>(parent)])) {
      if (done()) return;
      if (consistent(node, nb.atom)) assign(depth, node, nb.atom);
    }
  }

  const Pattern& p_;
  const MolecularGraph& g_;
  MatchMode mode_;
  bool first_only_;
  std::vector<int> order_;
  std::vector<std::pair<int, int>> parent_;
  std::vector<int> map_;
  std::vector<bool> used_;
  std::set<std::vector<int>> seen_sets_;
  std::vector<AtomMapping> results_;
};

}  // namespace

std::vector<AtomMapping> match_pattern(const Pattern& p, const MolecularGraph& g, MatchMode mode) {
  return Matcher(p, g, mode, false).run();
}

bool has_match(const Pattern& p, const MolecularGraph& g) {
  return !Matcher(p, g, MatchMode::AllMappings, true).run().empty();
}

}  // namespace molexplain::chem
