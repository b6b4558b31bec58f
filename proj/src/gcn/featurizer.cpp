#include <algorithm>

#include "molexplain/gcn.hpp"

namespace molexplain::gcn {

std::string pooling_name(Pooling p) {
  switch (p) {
    case Pooling::Max: return "max";
    case Pooling::Sum: return "sum";
    case Pooling::Mean: return "mean";
  }
  return "unknown";
}

Pooling pooling_from_name(const std::string& name) {
  if (name == "max") return Pooling::Max;
  if (name == "sum") return Pooling::Sum;
  if (name == "mean") return Pooling::Mean;
  throw UserError("unknown pooling '" + name + "' (expected max, sum or mean)");
}

AtomFeaturizer::AtomFeaturizer() : elements_{6, 7, 8, 16, 9, 17, 35, 53, 15, 5} {}

std::size_t AtomFeaturizer::element_slot(int element) const {
  const auto it = std::find(elements_.begin(), elements_.end(), element);
  return it == elements_.end() ? elements_.size() : static_cast<std::size_t>(it - elements_.begin());
}

Matrix AtomFeaturizer::featurize(const chem::MolecularGraph& g) const {
  Matrix out(g.atom_count(), dim());
  const std::size_t bond_base = elements_.size() + 1;
  for (int v = 0; v < static_cast<int>(g.atom_count()); ++v) {
    const auto row = static_cast<std::size_t>(v);
    out(row, element_slot(g.atom(v).element)) = 1.0;
    for (const chem::Neighbor& nb : g.neighbors(v)) {
      std::size_t slot = 0;
      switch (g.bond(nb.bond).order) {
        case chem::BondOrder::Single: slot = 0; break;
        case chem::BondOrder::Double: slot = 1; break;
        case chem::BondOrder::Triple: slot = 2; break;
        case chem::BondOrder::Aromatic: slot = 3; break;
      }
      out(row, bond_base + slot) += 1.0;
    }
  }
  return out;
}

}  // namespace molexplain::gcn
