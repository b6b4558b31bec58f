#include <array>

#include "molexplain/chem.hpp"

namespace molexplain::chem {
namespace {

constexpr std::array<std::string_view, 87> kSymbols = {
    "",   "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na", "Mg", "Al", "Si",
    "P",  "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",  "Cr", "Mn", "Fe", "Co", "Ni", "Cu",
    "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru",
    "Rh", "Pd", "Ag", "Cd", "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr",
    "Nd", "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W",
    "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn"};

// Main-group "group" used for the isoelectronic charge adjustment.
int main_group(int element) {
  switch (element) {
    case 5: return 13;
    case 6: return 14;
    case 7:
    case 15: return 15;
    case 8:
    case 16: return 16;
    case 9:
    case 17:
    case 35:
    case 53: return 17;
    default: return 0;
  }
}

int octet_valence(int group) {
  switch (group) {
    case 13: return 3;
    case 14: return 4;
    case 15: return 3;
    case 16: return 2;
    case 17: return 1;
    case 18: return 0;
    case 12: return 2;
    default: return -1;
  }
}

}  // namespace

std::string_view element_symbol(int atomic_number) {
  if (atomic_number <= 0 || atomic_number >= static_cast<int>(kSymbols.size())) return "";
  return kSymbols[static_cast<std::size_t>(atomic_number)];
}

int atomic_number(std::string_view symbol) {
  for (std::size_t z = 1; z < kSymbols.size(); ++z) {
    if (kSymbols[z] == symbol) return static_cast<int>(z);
  }
  return 0;
}

int valence_contribution(BondOrder order) {
  switch (order) {
    case BondOrder::Single: return 1;
    case BondOrder::Double: return 2;
    case BondOrder::Triple: return 3;
    case BondOrder::Aromatic: return 1;
  }
  return 1;
}

char bond_symbol(BondOrder order) {
  switch (order) {
    case BondOrder::Single: return '-';
    case BondOrder::Double: return '=';
    case BondOrder::Triple: return '#';
    case BondOrder::Aromatic: return ':';
  }
  return '-';
}

std::vector<int> allowed_valences(int element, int formal_charge) {
  const int group = main_group(element);
  if (group == 0) return {};
  if (formal_charge == 0) {
    switch (element) {
      case 5: return {3};
      case 6: return {4};
      case 7: return {3};
      case 8: return {2};
      case 15: return {3, 5};
      case 16: return {2, 4, 6};
      default: return {1};
    }
  }
  const int v = octet_valence(group - formal_charge);
  if (v < 0) return {};
  return {v};
}

}  // namespace molexplain::chem
