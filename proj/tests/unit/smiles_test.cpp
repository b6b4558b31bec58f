#include <gtest/gtest.h>

#include "molexplain/chem.hpp"
#include "test_util.hpp"

namespace {

using namespace molexplain;
using namespace molexplain::chem;

std::vector<int> hydrogens(const MolecularGraph& g) {
  std::vector<int> h;
  for (const Atom& a : g.atoms()) h.push_back(a.implicit_h);
  return h;
}

std::size_t error_offset(const std::string& smiles) {
  try {
    parse_smiles(smiles);
  } catch (const ParseError& e) {
    return e.offset();
  }
  ADD_FAILURE() << "no error for " << smiles;
  return 0;
}

std::string error_text(const std::string& smiles) {
  try {
    parse_smiles(smiles);
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

TEST(Smiles, Ethanol) {
  const MolecularGraph g = parse_smiles("CCO");
  ASSERT_EQ(g.atom_count(), 3u);
  EXPECT_EQ(hydrogens(g), (std::vector<int>{3, 2, 1}));
  ASSERT_EQ(g.bond_count(), 2u);
  for (const Bond& b : g.bonds()) EXPECT_EQ(b.order, BondOrder::Single);
  EXPECT_EQ(g.atom(2).element, 8);
}

TEST(Smiles, Benzene) {
  const MolecularGraph g = parse_smiles("c1ccccc1");
  ASSERT_EQ(g.atom_count(), 6u);
  for (const Atom& a : g.atoms()) {
    EXPECT_TRUE(a.aromatic);
    EXPECT_TRUE(a.ring_member);
    EXPECT_EQ(a.implicit_h, 1);
  }
  EXPECT_EQ(g.bond_count(), 6u);
}

TEST(Smiles, KekuleBenzeneIsPerceivedAromatic) {
  const MolecularGraph g = parse_smiles("C1=CC=CC=C1");
  for (const Atom& a : g.atoms()) EXPECT_TRUE(a.aromatic);
  EXPECT_TRUE(isomorphic(g, parse_smiles("c1ccccc1")));
}

TEST(Smiles, ErrorsCarryOffsets) {
  EXPECT_EQ(error_text("C("), "unbalanced parenthesis at offset 1");
  EXPECT_EQ(error_offset("CC1CC"), 2u);
  EXPECT_NE(error_text("CC1CC").find("unmatched ring closure"), std::string::npos);
  EXPECT_NE(error_text("CXC").find("unknown element"), std::string::npos);
  EXPECT_EQ(error_offset("CXC"), 1u);
  EXPECT_EQ(error_text("CC(C)(C)(C)C"), "valence violation on C at offset 1");
  EXPECT_NE(error_text("F/C=C/F").find("stereochemistry"), std::string::npos);
  EXPECT_NE(error_text("C[C@H](N)O").find("'@'"), std::string::npos);
  EXPECT_EQ(error_offset(""), 0u);
}

TEST(Smiles, BracketAtomsAndCharges) {
  const MolecularGraph g = parse_smiles("[NH4+]");
  EXPECT_EQ(g.atom(0).formal_charge, 1);
  EXPECT_EQ(g.atom(0).implicit_h, 4);
  const MolecularGraph nitro = parse_smiles("C[N+](=O)[O-]");
  EXPECT_EQ(nitro.atom(1).formal_charge, 1);
  EXPECT_EQ(nitro.atom(3).formal_charge, -1);
  EXPECT_EQ(nitro.atom(3).implicit_h, 0);
  EXPECT_EQ(parse_smiles("[CH3]C").atom(0).implicit_h, 3);
}

TEST(Smiles, RingClosuresAndComponents) {
  const MolecularGraph g = parse_smiles("C%10CC%10.O");
  EXPECT_EQ(g.atom_count(), 4u);
  EXPECT_EQ(component_count(g), 2);
  EXPECT_TRUE(g.atom(0).ring_member);
  EXPECT_FALSE(g.atom(3).ring_member);
}

TEST(Smiles, HigherValenceStates) {
  EXPECT_EQ(parse_smiles("CS(=O)(=O)O").atom(1).implicit_h, 0);
  EXPECT_EQ(parse_smiles("OP(=O)(O)O").atom(1).implicit_h, 0);
  EXPECT_EQ(parse_smiles("c1ccncc1").atom(3).implicit_h, 0);
  EXPECT_EQ(parse_smiles("c1cc[nH]c1").atom(3).implicit_h, 1);
}

// Every atom's hydrogens plus bond valence is an allowed valence.
TEST(Smiles, ValenceSumsAreAllowed) {
  for (const std::string& s : testutil::curated_smiles()) {
    const MolecularGraph g = parse_smiles(s);
    for (int v = 0; v < static_cast<int>(g.atom_count()); ++v) {
      const Atom& a = g.atom(v);
      const auto allowed = allowed_valences(a.element, a.formal_charge);
      int total = g.bond_valence(v) + a.implicit_h;
      const bool ok = std::find(allowed.begin(), allowed.end(), total) != allowed.end() ||
                      (a.aromatic && std::find(allowed.begin(), allowed.end(), total + 1) != allowed.end());
      EXPECT_TRUE(ok) << s << " atom " << v;
    }
    g.check_invariants();
  }
}

TEST(Smiles, CanonicalFormIsOrderIndependent) {
  EXPECT_EQ(to_smiles(parse_smiles("OCC")), to_smiles(parse_smiles("CCO")));
  EXPECT_EQ(to_smiles(parse_smiles("C(C)(C)O")), to_smiles(parse_smiles("CC(O)C")));
  EXPECT_EQ(to_smiles(parse_smiles("c1ccccc1O")), to_smiles(parse_smiles("Oc1ccccc1")));
  EXPECT_FALSE(isomorphic(parse_smiles("CCO"), parse_smiles("COC")));
}

TEST(Smiles, BranchOrderPermutationGivesIsomorphicGraph) {
  EXPECT_TRUE(isomorphic(parse_smiles("CC(O)(N)Cl"), parse_smiles("CC(Cl)(N)O")));
  EXPECT_TRUE(isomorphic(parse_smiles("C(=O)(O)CC"), parse_smiles("CCC(O)=O")));
}

TEST(Smiles, WriterRoundTripsCuratedAndRandomMolecules) {
  std::vector<MolecularGraph> graphs;
  for (const std::string& s : testutil::curated_smiles()) graphs.push_back(parse_smiles(s));
  for (auto& g : testutil::random_molecules(200, 11)) graphs.push_back(std::move(g));
  Rng rng(5);
  for (const MolecularGraph& g : graphs) {
    const std::string s = to_smiles(g);
    const MolecularGraph back = parse_smiles(s);
    EXPECT_TRUE(isomorphic(g, back)) << s;
    EXPECT_EQ(to_smiles(back), s);
    const auto perm = testutil::random_permutation(g.atom_count(), rng);
    EXPECT_EQ(to_smiles(permute_atoms(g, perm)), s);
  }
}

TEST(Graph, RejectsSelfLoopsAndDuplicates) {
  MolecularGraph g;
  g.add_atom({});
  g.add_atom({});
  g.add_bond(0, 1, BondOrder::Single);
  EXPECT_THROW(g.add_bond(0, 1, BondOrder::Double), UserError);
  EXPECT_THROW(g.add_bond(1, 1, BondOrder::Single), UserError);
  EXPECT_THROW(g.add_bond(0, 5, BondOrder::Single), UserError);
}

TEST(Graph, AtomsWithinAndInducedSubgraph) {
  const MolecularGraph g = parse_smiles("CCCCO");
  EXPECT_EQ(atoms_within(g, 0, 0), (std::vector<int>{0}));
  EXPECT_EQ(atoms_within(g, 2, 1), (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(atoms_within(g, 0, 10), (std::vector<int>{0, 1, 2, 3, 4}));
  const std::vector<int> keep{3, 4};
  const MolecularGraph sub = induced_subgraph(g, keep);
  EXPECT_EQ(sub.atom_count(), 2u);
  EXPECT_EQ(sub.bond_count(), 1u);
  EXPECT_EQ(sub.atom(1).element, 8);
}

}  // namespace
