#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "molexplain/error.hpp"

namespace molexplain::chem {

// Element symbol for an atomic number, "" when unknown.
std::string_view element_symbol(int atomic_number);
// Atomic number for a symbol (case-sensitive, e.g. "Cl"), 0 when unknown.
int atomic_number(std::string_view symbol);

enum class BondOrder : std::uint8_t { Single = 1, Double = 2, Triple = 3, Aromatic = 4 };

// Contribution of a bond to the valence sum, aromatic counted as one; the
// extra aromatic electron is handled per atom.
int valence_contribution(BondOrder order);
char bond_symbol(BondOrder order);

struct Atom {
  int element = 6;  // atomic number
  bool aromatic = false;
  int formal_charge = 0;
  int implicit_h = 0;
  bool ring_member = false;

  friend bool operator==(const Atom&, const Atom&) = default;
};

struct Bond {
  int begin = 0;
  int end = 0;
  BondOrder order = BondOrder::Single;
  bool ring = false;

  int other(int atom) const { return atom == begin ? end : begin; }
  friend bool operator==(const Bond&, const Bond&) = default;
};

struct Neighbor {
  int atom;
  int bond;
};

class MolecularGraph {
 public:
  int add_atom(const Atom& atom);
  // Throws UserError on self-loops, duplicate bonds or bad indices.
  int add_bond(int a, int b, BondOrder order);

  std::size_t atom_count() const { return atoms_.size(); }
  std::size_t bond_count() const { return bonds_.size(); }
  bool empty() const { return atoms_.empty(); }

  const Atom& atom(int i) const { return atoms_[static_cast<std::size_t>(i)]; }
  Atom& atom(int i) { return atoms_[static_cast<std::size_t>(i)]; }
  const Bond& bond(int i) const { return bonds_[static_cast<std::size_t>(i)]; }
  Bond& bond(int i) { return bonds_[static_cast<std::size_t>(i)]; }
  std::span<const Atom> atoms() const { return atoms_; }
  std::span<const Bond> bonds() const { return bonds_; }
  std::span<const Neighbor> neighbors(int i) const { return adjacency_[static_cast<std::size_t>(i)]; }
  int degree(int i) const { return static_cast<int>(adjacency_[static_cast<std::size_t>(i)].size()); }

  // Bond index between a and b, -1 if none.
  int find_bond(int a, int b) const;

  // Sum of valence contributions of the atom's bonds.
  int bond_valence(int i) const;
  bool has_aromatic_bond(int i) const;

  // Recomputes ring flags of bonds and atoms (a bond is a ring bond iff it
  // is not a bridge).
  void perceive_rings();

  // Throws InvariantError if adjacency/bond invariants are broken.
  void check_invariants() const;

 private:
  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
  std::vector<std::vector<Neighbor>> adjacency_;
};

// Allowed total valences (bond valence + hydrogens) for an element with a
// given charge. Empty when the element is outside the valence table.
std::vector<int> allowed_valences(int element, int formal_charge);

// Hydrogen count an unbracketed atom gets: smallest allowed valence that is
// at least the bond valence. nullopt means a valence violation.
std::optional<int> default_implicit_h(const MolecularGraph& g, int atom);

// Marks every 6-membered ring of C/N atoms with alternating single/double
// bonds as aromatic. Hydrogen counts are left untouched.
void perceive_aromaticity(MolecularGraph& g);

struct SmilesOptions {
  // Parse: throw on valence violations; with false, atoms with an open
  // valence keep zero hydrogens (fragments). Write: emit hydrogen counts.
  bool hydrogens = true;
};

// Parses organic-subset and bracket atoms, bonds - = # :, branches, ring
// closures (digits and %nn) and '.' separated components. Throws ParseError.
MolecularGraph parse_smiles(std::string_view smiles, const SmilesOptions& options = {});

// Deterministic canonical SMILES. With hydrogens=false atoms are written
// without hydrogen annotations (fragment display).
std::string to_smiles(const MolecularGraph& g, const SmilesOptions& options = {});

// Canonical atom ranks from invariant refinement with tie breaking: a
// permutation of 0..n-1 that is the same for isomorphic graphs up to
// automorphism.
std::vector<int> canonical_ranks(const MolecularGraph& g);

bool isomorphic(const MolecularGraph& a, const MolecularGraph& b);

// new_index[old] gives each atom's new position.
MolecularGraph permute_atoms(const MolecularGraph& g, std::span<const int> new_index);

// Atoms at graph distance <= radius from center, sorted ascending.
std::vector<int> atoms_within(const MolecularGraph& g, int center, int radius);

// Subgraph induced by `atoms` (sorted unique). Atom attributes, including
// hydrogen counts and ring flags, are copied from the parent.
MolecularGraph induced_subgraph(const MolecularGraph& g, std::span<const int> atoms);

// Number of connected components.
int component_count(const MolecularGraph& g);

}  // namespace molexplain::chem
