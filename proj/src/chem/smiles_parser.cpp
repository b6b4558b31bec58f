#include <cctype>
#include <map>
#include <optional>

#include "molexplain/chem.hpp"

namespace molexplain::chem {
namespace {

struct RingOpen {
  int atom;
  std::optional<BondOrder> order;
  std::size_t offset;
};

struct PendingAtom {
  std::size_t offset;
  bool bracket;
};

class SmilesParser {
 public:
  SmilesParser(std::string_view s, bool check_valence) : s_(s), check_valence_(check_valence) {}

  MolecularGraph parse() {
    if (s_.empty()) throw ParseError("empty SMILES", 0);
    while (pos_ < s_.size()) step();
    if (!branches_.empty()) throw ParseError("unbalanced parenthesis", branches_.back().second);
    if (!rings_.empty()) {
      const auto& [digit, open] = *rings_.begin();
      throw ParseError("unmatched ring closure " + ring_label(digit), open.offset);
    }
    if (pending_bond_) throw ParseError("dangling bond", pending_bond_offset_);
    if (g_.empty()) throw ParseError("no atoms", 0);
    assign_hydrogens();
    perceive_aromaticity(g_);
    g_.perceive_rings();
    return std::move(g_);
  }

 private:
  static std::string ring_label(int digit) {
    return digit < 10 ? "'" + std::to_string(digit) + "'" : "'%" + std::to_string(digit) + "'";
  }

  void step() {
    const char c = s_[pos_];
    switch (c) {
      case '(':
        if (prev_ < 0) throw ParseError("branch without preceding atom", pos_);
        if (pending_bond_) throw ParseError("bond before branch", pos_);
        branches_.push_back({prev_, pos_});
        ++pos_;
        if (pos_ < s_.size() && s_[pos_] == ')') throw ParseError("empty branch", pos_);
        return;
      case ')':
        if (branches_.empty()) throw ParseError("unbalanced parenthesis", pos_);
        if (pending_bond_) throw ParseError("dangling bond", pending_bond_offset_);
        prev_ = branches_.back().first;
        branches_.pop_back();
        ++pos_;
        return;
      case '-':
      case '=':
      case '#':
      case ':':
        if (pending_bond_) throw ParseError("consecutive bond symbols", pos_);
        if (prev_ < 0) throw ParseError("bond without preceding atom", pos_);
        pending_bond_ = c == '-' ? BondOrder::Single : c == '=' ? BondOrder::Double : c == '#' ? BondOrder::Triple : BondOrder::Aromatic;
        pending_bond_offset_ = pos_;
        ++pos_;
        return;
      case '/':
      case '\\':
      case '@':
        throw ParseError(std::string("unsupported stereochemistry '") + c + "'", pos_);
      case '$':
        throw ParseError("unsupported bond '$'", pos_);
      case '.':
        if (pending_bond_) throw ParseError("bond before '.'", pos_);
        if (prev_ < 0) throw ParseError("'.' without preceding atom", pos_);
        prev_ = -1;
        ++pos_;
        return;
      case '%': {
        const std::size_t start = pos_;
        if (pos_ + 2 >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[pos_ + 1])) ||
            !std::isdigit(static_cast<unsigned char>(s_[pos_ + 2]))) {
          throw ParseError("malformed %nn ring closure", start);
        }
        const int digit = (s_[pos_ + 1] - '0') * 10 + (s_[pos_ + 2] - '0');
        pos_ += 3;
        ring_closure(digit, start);
        return;
      }
      case '[':
        bracket_atom();
        return;
      default:
        break;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      ring_closure(c - '0', pos_);
      ++pos_;
      return;
    }
    organic_atom();
  }

  void ring_closure(int digit, std::size_t offset) {
    if (prev_ < 0) throw ParseError("ring closure without preceding atom", offset);
    auto it = rings_.find(digit);
    if (it == rings_.end()) {
      rings_[digit] = RingOpen{prev_, pending_bond_, offset};
      pending_bond_.reset();
      return;
    }
    const RingOpen open = it->second;
    rings_.erase(it);
    std::optional<BondOrder> order = pending_bond_;
    pending_bond_.reset();
    if (open.order && order && *open.order != *order) {
      throw ParseError("conflicting ring closure bond orders", offset);
    }
    if (!order) order = open.order;
    if (open.atom == prev_) throw ParseError("ring closure bonds atom to itself", offset);
    connect(open.atom, prev_, order, offset);
  }

  void connect(int a, int b, std::optional<BondOrder> order, std::size_t offset) {
    BondOrder o = BondOrder::Single;
    if (order) {
      o = *order;
    } else if (g_.atom(a).aromatic && g_.atom(b).aromatic) {
      o = BondOrder::Aromatic;
    }
    if (g_.find_bond(a, b) >= 0) throw ParseError("duplicate bond", offset);
    g_.add_bond(a, b, o);
  }

  void place_atom(const Atom& atom, std::size_t offset, bool bracket) {
    const int idx = g_.add_atom(atom);
    info_.push_back({offset, bracket});
    if (prev_ >= 0) connect(prev_, idx, pending_bond_, pending_bond_ ? pending_bond_offset_ : offset);
    pending_bond_.reset();
    prev_ = idx;
  }

  void organic_atom() {
    const std::size_t start = pos_;
    const char c = s_[pos_];
    Atom atom;
    auto two = [&](char second) { return pos_ + 1 < s_.size() && s_[pos_ + 1] == second; };
    switch (c) {
      case 'B':
        if (two('r')) {
          atom.element = 35;
          ++pos_;
        } else {
          atom.element = 5;
        }
        break;
      case 'C':
        if (two('l')) {
          atom.element = 17;
          ++pos_;
        } else {
          atom.element = 6;
        }
        break;
      case 'N': atom.element = 7; break;
      case 'O': atom.element = 8; break;
      case 'P': atom.element = 15; break;
      case 'S': atom.element = 16; break;
      case 'F': atom.element = 9; break;
      case 'I': atom.element = 53; break;
      case 'b': atom.element = 5; atom.aromatic = true; break;
      case 'c': atom.element = 6; atom.aromatic = true; break;
      case 'n': atom.element = 7; atom.aromatic = true; break;
      case 'o': atom.element = 8; atom.aromatic = true; break;
      case 'p': atom.element = 15; atom.aromatic = true; break;
      case 's': atom.element = 16; atom.aromatic = true; break;
      default:
        if (std::isalpha(static_cast<unsigned char>(c))) throw ParseError(std::string("unknown element '") + c + "'", start);
        throw ParseError(std::string("unexpected character '") + c + "'", start);
    }
    ++pos_;
    place_atom(atom, start, false);
  }

  void bracket_atom() {
    const std::size_t start = pos_;
    ++pos_;
    auto peek = [&]() -> char { return pos_ < s_.size() ? s_[pos_] : '\0'; };
    if (std::isdigit(static_cast<unsigned char>(peek()))) throw ParseError("unsupported isotope label", pos_);
    Atom atom;
    const std::size_t sym_start = pos_;
    if (!std::isalpha(static_cast<unsigned char>(peek()))) throw ParseError("missing element symbol", pos_);
    std::string sym(1, peek());
    ++pos_;
    if (std::islower(static_cast<unsigned char>(sym[0]))) {
      // Aromatic bracket atoms: b c n o p s only.
      atom.aromatic = true;
      sym[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(sym[0])));
      if (sym != "B" && sym != "C" && sym != "N" && sym != "O" && sym != "P" && sym != "S") {
        throw ParseError("unknown aromatic element '" + std::string(1, static_cast<char>(std::tolower(sym[0]))) + "'", sym_start);
      }
    } else if (std::islower(static_cast<unsigned char>(peek())) && atomic_number(sym + peek()) != 0) {
      sym += peek();
      ++pos_;
    }
    atom.element = atomic_number(sym);
    if (atom.element == 0) throw ParseError("unknown element '" + sym + "'", sym_start);
    if (peek() == '@') throw ParseError("unsupported stereochemistry '@'", pos_);
    int h = 0;
    if (peek() == 'H') {
      ++pos_;
      h = 1;
      if (std::isdigit(static_cast<unsigned char>(peek()))) {
        h = peek() - '0';
        ++pos_;
      }
    }
    if (peek() == '+' || peek() == '-') {
      const char sign = peek();
      int magnitude = 0;
      while (peek() == sign) {
        ++magnitude;
        ++pos_;
      }
      if (magnitude == 1 && std::isdigit(static_cast<unsigned char>(peek()))) {
        magnitude = peek() - '0';
        ++pos_;
      }
      atom.formal_charge = sign == '+' ? magnitude : -magnitude;
    }
    if (peek() == ':') throw ParseError("unsupported atom class", pos_);
    if (peek() != ']') {
      if (peek() == '\0') throw ParseError("unterminated bracket atom", start);
      throw ParseError(std::string("unexpected character '") + peek() + "' in bracket atom", pos_);
    }
    ++pos_;
    atom.implicit_h = h;
    place_atom(atom, start, true);
  }

  void assign_hydrogens() {
    for (int v = 0; v < static_cast<int>(g_.atom_count()); ++v) {
      const PendingAtom& info = info_[static_cast<std::size_t>(v)];
      Atom& a = g_.atom(v);
      if (!info.bracket) {
        const std::optional<int> h = default_implicit_h(g_, v);
        if (!h && !check_valence_) continue;
        if (!h) throw ParseError("valence violation on " + std::string(element_symbol(a.element)), info.offset);
        a.implicit_h = *h;
        continue;
      }
      const std::vector<int> allowed = allowed_valences(a.element, a.formal_charge);
      if (allowed.empty() || !check_valence_) continue;
      const int total = g_.bond_valence(v) + a.implicit_h;
      bool ok = false;
      for (int val : allowed) {
        ok = ok || val == total || (a.aromatic && g_.has_aromatic_bond(v) && val == total + 1);
      }
      if (!ok) throw ParseError("valence violation on " + std::string(element_symbol(a.element)), info.offset);
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  bool check_valence_;
  MolecularGraph g_;
  std::vector<PendingAtom> info_;
  std::vector<std::pair<int, std::size_t>> branches_;
  std::map<int, RingOpen> rings_;
  int prev_ = -1;
  std::optional<BondOrder> pending_bond_;
  std::size_t pending_bond_offset_ = 0;
};

}  // namespace

MolecularGraph parse_smiles(std::string_view smiles, const SmilesOptions& options) {
  for (std::size_t i = 0; i < smiles.size(); ++i) {
    if (static_cast<unsigned char>(smiles[i]) > 127) throw ParseError("non-ASCII character", i);
  }
  return SmilesParser(smiles, options.hydrogens).parse();
}

}  // namespace molexplain::chem
