#pragma once
// Independent reference computations used by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <span>
#include <vector>

#include "molexplain/chem.hpp"
#include "molexplain/pattern.hpp"
#include "molexplain/rng.hpp"

namespace molexplain::oracle {

// Every injective node -> atom assignment satisfying all constraints,
// reported as sorted atom sets.
inline std::set<std::vector<int>> brute_force_matches(const chem::Pattern& p, const chem::MolecularGraph& g) {
  std::set<std::vector<int>> out;
  const int k = static_cast<int>(p.node_count());
  const int n = static_cast<int>(g.atom_count());
  if (k > n) return out;
  std::vector<int> assign(static_cast<std::size_t>(k), 0);
  std::function<void(int)> rec = [&](int i) {
    if (i == k) {
      for (const chem::PatternEdge& e : p.edges()) {
        const int b = g.find_bond(assign[static_cast<std::size_t>(e.a)], assign[static_cast<std::size_t>(e.b)]);
        if (b < 0 || !chem::bond_accepts(e.bond, g.bond(b).order)) return;
      }
      std::vector<int> atoms = assign;
      std::sort(atoms.begin(), atoms.end());
      out.insert(atoms);
      return;
    }
    for (int v = 0; v < n; ++v) {
      if (std::find(assign.begin(), assign.begin() + i, v) != assign.begin() + i) continue;
      if (!p.nodes()[static_cast<std::size_t>(i)].accepts(g, v)) continue;
      assign[static_cast<std::size_t>(i)] = v;
      rec(i + 1);
    }
  };
  rec(0);
  return out;
}

inline std::size_t brute_force_mapping_count(const chem::Pattern& p, const chem::MolecularGraph& g) {
  std::size_t count = 0;
  const int k = static_cast<int>(p.node_count());
  const int n = static_cast<int>(g.atom_count());
  std::vector<int> assign(static_cast<std::size_t>(k), 0);
  std::function<void(int)> rec = [&](int i) {
    if (i == k) {
      for (const chem::PatternEdge& e : p.edges()) {
        const int b = g.find_bond(assign[static_cast<std::size_t>(e.a)], assign[static_cast<std::size_t>(e.b)]);
        if (b < 0 || !chem::bond_accepts(e.bond, g.bond(b).order)) return;
      }
      ++count;
      return;
    }
    for (int v = 0; v < n; ++v) {
      if (std::find(assign.begin(), assign.begin() + i, v) != assign.begin() + i) continue;
      if (!p.nodes()[static_cast<std::size_t>(i)].accepts(g, v)) continue;
      assign[static_cast<std::size_t>(i)] = v;
      rec(i + 1);
    }
  };
  rec(0);
  return count;
}

// Random connected pattern with 1..max_nodes nodes and loose constraints.
inline chem::Pattern random_pattern(Rng& rng, int max_nodes) {
  const int k = rng.range(1, max_nodes);
  std::vector<chem::AtomConstraint> nodes(static_cast<std::size_t>(k));
  static constexpr int kElements[] = {6, 6, 6, 7, 8, 16, 17};
  for (auto& c : nodes) {
    if (rng.bernoulli(0.75)) c.element = kElements[rng.below(7)];
    if (rng.bernoulli(0.2)) c.aromatic = rng.bernoulli(0.5);
    if (rng.bernoulli(0.2)) c.h_count = rng.range(0, 3);
    if (rng.bernoulli(0.1)) c.connectivity = rng.range(1, 4);
    if (rng.bernoulli(0.15)) c.in_ring = rng.bernoulli(0.5);
    if (rng.bernoulli(0.05)) c.formal_charge = rng.range(-1, 1);
  }
  static constexpr chem::BondConstraint kBonds[] = {
      chem::BondConstraint::Single,   chem::BondConstraint::Single,           chem::BondConstraint::Double,
      chem::BondConstraint::Triple,   chem::BondConstraint::Aromatic,         chem::BondConstraint::SingleOrAromatic,
      chem::BondConstraint::Any,      chem::BondConstraint::SingleOrAromatic};
  std::vector<chem::PatternEdge> edges;
  std::set<std::pair<int, int>> used;
  for (int i = 1; i < k; ++i) {
    const int parent = static_cast<int>(rng.below(static_cast<std::uint64_t>(i)));
    edges.push_back({parent, i, kBonds[rng.below(8)]});
    used.insert({parent, i});
  }
  if (k >= 3 && rng.bernoulli(0.3)) {
    const int a = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
    const int b = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
    if (a != b && !used.count({std::min(a, b), std::max(a, b)})) edges.push_back({std::min(a, b), std::max(a, b), kBonds[rng.below(8)]});
  }
  return chem::Pattern(std::move(nodes), std::move(edges));
}

// Probability a random positive outranks a random negative, by pairs.
inline double brute_force_auc(std::span<const double> s, std::span<const int> y) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      pairs += 1.0;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

struct ExactMw {
  double u;
  double p;
};

// U of `a` by direct pair counting and the two-sided exact p-value by
// enumerating every way to choose which n1 of the pooled ranks belong to a.
inline ExactMw enumerate_mann_whitney(std::span<const double> a, std::span<const double> b) {
  double u = 0.0;
  for (double x : a) {
    for (double y : b) u += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
  }
  const std::size_t n1 = a.size(), n = a.size() + b.size();
  std::size_t total = 0, lower = 0, upper = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != n1) continue;
    // U for this assignment: pairs where an a-rank exceeds a b-rank.
    std::size_t uu = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(mask >> i & 1u)) continue;
      for (std::size_t j = 0; j < i; ++j) uu += (mask >> j & 1u) ? 0 : 1;
    }
    ++total;
    if (static_cast<double>(uu) <= u) ++lower;
    if (static_cast<double>(uu) >= u) ++upper;
  }
  const double p = std::min(1.0, 2.0 * static_cast<double>(std::min(lower, upper)) / static_cast<double>(total));
  return {u, p};
}

// Relative error with an absolute floor for near-zero derivatives.
inline double relative_error(double analytic, double numeric, double floor = 1e-8) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

}  // namespace molexplain::oracle
