#pragma once
// Structural patterns: a small SMARTS subset and subgraph matching.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "molexplain/chem.hpp"

namespace molexplain::chem {

struct AtomConstraint {
  std::optional<int> element;       // atomic number; unset = any
  std::optional<bool> aromatic;
  std::optional<int> h_count;       // attached hydrogens
  std::optional<int> connectivity;  // X: heavy neighbours + hydrogens
  std::optional<bool> in_ring;
  std::optional<int> formal_charge;

  bool accepts(const MolecularGraph& g, int atom) const;
  friend bool operator==(const AtomConstraint&, const AtomConstraint&) = default;
};

enum class BondConstraint { Single, Double, Triple, Aromatic, SingleOrAromatic, Any };

bool bond_accepts(BondConstraint c, BondOrder order);

struct PatternEdge {
  int a;
  int b;
  BondConstraint bond;
};

class Pattern {
 public:
  Pattern() = default;
  // Throws UserError when edges reference missing nodes or the graph is
  // disconnected or empty.
  Pattern(std::vector<AtomConstraint> nodes, std::vector<PatternEdge> edges, std::string source = {});

  std::size_t node_count() const { return nodes_.size(); }
  const std::vector<AtomConstraint>& nodes() const { return nodes_; }
  const std::vector<PatternEdge>& edges() const { return edges_; }
  const std::string& source() const { return source_; }
  // Edges incident to node i as (other node, edge index).
  const std::vector<std::pair<int, int>>& incident(int i) const { return incident_[static_cast<std::size_t>(i)]; }

 private:
  std::vector<AtomConstraint> nodes_;
  std::vector<PatternEdge> edges_;
  std::vector<std::vector<std::pair<int, int>>> incident_;
  std::string source_;
};

// Supported: organic atoms (aliphatic/aromatic), '*', 'A', 'a'; bracket
// primitives element, #n, Hn, Xn, R / R0, charge, joined implicitly or by
// '&' / ';'; bonds - = # : ~ and implicit single-or-aromatic; branches and
// ring closures. Anything else is rejected with "unsupported primitive".
Pattern parse_pattern(std::string_view smarts);

// Exact-structure pattern of a graph: elements, aromaticity and bond orders
// must match; hydrogens and ring flags are free.
Pattern pattern_from_graph(const MolecularGraph& g);

using AtomMapping = std::vector<int>;  // pattern node -> molecule atom

enum class MatchMode { UniqueAtomSets, AllMappings };

// All injective mappings satisfying every node and edge constraint. By
// default one mapping per distinct matched atom set.
std::vector<AtomMapping> match_pattern(const Pattern& p, const MolecularGraph& g,
                                       MatchMode mode = MatchMode::UniqueAtomSets);

bool has_match(const Pattern& p, const MolecularGraph& g);

struct NamedPattern {
  std::string id;
  Pattern pattern;
};

// Reads "id<TAB or space>SMARTS" lines; blank lines and '#' comments are
// skipped. Throws UserError naming the line on a bad pattern.
std::vector<NamedPattern> read_pattern_file(const std::string& path);

}  // namespace molexplain::chem
