#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "molexplain/pattern.hpp"

namespace molexplain::chem {

Pattern::Pattern(std::vector<AtomConstraint> nodes, std::vector<PatternEdge> edges, std::string source)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), source_(std::move(source)) {
  const int n = static_cast<int>(nodes_.size());
  if (n == 0) throw UserError("pattern has no nodes");
  incident_.assign(nodes_.size(), {});
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const PatternEdge& edge = edges_[e];
    if (edge.a < 0 || edge.b < 0 || edge.a >= n || edge.b >= n || edge.a == edge.b) {
      throw UserError("pattern edge references invalid nodes");
    }
    incident_[static_cast<std::size_t>(edge.a)].push_back({edge.b, static_cast<int>(e)});
    incident_[static_cast<std::size_t>(edge.b)].push_back({edge.a, static_cast<int>(e)});
  }
  std::vector<bool> seen(nodes_.size(), false);
  std::vector<int> stack{0};
  seen[0] = true;
  int reached = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (const auto& [w, e] : incident_[static_cast<std::size_t>(v)]) {
      if (!seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = true;
        ++reached;
        stack.push_back(w);
      }
    }
  }
  if (reached != n) throw UserError("pattern is not connected");
}

namespace {

class SmartsParser {
 public:
  explicit SmartsParser(std::string_view s) : s_(s) {}

  Pattern parse() {
    if (s_.empty()) throw ParseError("empty pattern", 0);
    while (pos_ < s_.size()) step();
    if (!branches_.empty()) throw ParseError("unbalanced parenthesis", branches_.back().second);
    if (!rings_.empty()) throw ParseError("unmatched ring closure", rings_.begin()->second.offset);
    if (pending_) throw ParseError("dangling bond", pending_offset_);
    return Pattern(std::move(nodes_), std::move(edges_), std::string(s_));
  }

 private:
  struct RingOpen {
    int node;
    std::optional<BondConstraint> bond;
    std::size_t offset;
  };

  [[noreturn]] void unsupported(std::string_view what, std::size_t at) const {
    throw ParseError("unsupported primitive '" + std::string(what) + "'", at);
  }

  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }

  void step() {
    const char c = s_[pos_];
    switch (c) {
      case '(':
        if (prev_ < 0) throw ParseError("branch without preceding atom", pos_);
        branches_.push_back({prev_, pos_});
        ++pos_;
        return;
      case ')':
        if (branches_.empty()) throw ParseError("unbalanced parenthesis", pos_);
        if (pending_) throw ParseError("dangling bond", pending_offset_);
        prev_ = branches_.back().first;
        branches_.pop_back();
        ++pos_;
        return;
      case '-': set_bond(BondConstraint::Single); return;
      case '=': set_bond(BondConstraint::Double); return;
      case '#': set_bond(BondConstraint::Triple); return;
      case ':': set_bond(BondConstraint::Aromatic); return;
      case '~': set_bond(BondConstraint::Any); return;
      case '[': bracket(); return;
      case '%': {
        const std::size_t start = pos_;
        if (pos_ + 2 >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[pos_ + 1])) ||
            !std::isdigit(static_cast<unsigned char>(s_[pos_ + 2]))) {
          throw ParseError("malformed %nn ring closure", start);
        }
        const int d = (s_[pos_ + 1] - '0') * 10 + (s_[pos_ + 2] - '0');
        pos_ += 3;
        ring(d, start);
        return;
      }
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      ring(c - '0', pos_);
      ++pos_;
      return;
    }
    bare_atom();
  }

  void set_bond(BondConstraint b) {
    if (pending_) throw ParseError("consecutive bond symbols", pos_);
    if (prev_ < 0) throw ParseError("bond without preceding atom", pos_);
    pending_ = b;
    pending_offset_ = pos_;
    ++pos_;
  }

  void ring(int digit, std::size_t offset) {
    if (prev_ < 0) throw ParseError("ring closure without preceding atom", offset);
    auto it = rings_.find(digit);
    if (it == rings_.end()) {
      rings_[digit] = RingOpen{prev_, pending_, offset};
      pending_.reset();
      return;
    }
    RingOpen open = it->second;
    rings_.erase(it);
    std::optional<BondConstraint> b = pending_ ? pending_ : open.bond;
    pending_.reset();
    if (open.node == prev_) throw ParseError("ring closure bonds atom to itself", offset);
    edges_.push_back({open.node, prev_, b.value_or(BondConstraint::SingleOrAromatic)});
  }

  void add_node(const AtomConstraint& c) {
    nodes_.push_back(c);
    const int idx = static_cast<int>(nodes_.size()) - 1;
    if (prev_ >= 0) edges_.push_back({prev_, idx, pending_.value_or(BondConstraint::SingleOrAromatic)});
    pending_.reset();
    prev_ = idx;
  }

  void bare_atom() {
    const std::size_t start = pos_;
    const char c = s_[pos_];
    AtomConstraint ac;
    auto next_is = [&](char x) { return pos_ + 1 < s_.size() && s_[pos_ + 1] == x; };
    switch (c) {
      case '*': break;
      case 'A': ac.aromatic = false; break;
      case 'a': ac.aromatic = true; break;
      case 'B':
        if (next_is('r')) {
          ac.element = 35;
          ++pos_;
        } else {
          ac.element = 5;
        }
        ac.aromatic = false;
        break;
      case 'C':
        if (next_is('l')) {
          ac.element = 17;
          ++pos_;
        } else {
          ac.element = 6;
        }
        ac.aromatic = false;
        break;
      case 'N': ac.element = 7; ac.aromatic = false; break;
      case 'O': ac.element = 8; ac.aromatic = false; break;
      case 'P': ac.element = 15; ac.aromatic = false; break;
      case 'S': ac.element = 16; ac.aromatic = false; break;
      case 'F': ac.element = 9; ac.aromatic = false; break;
      case 'I': ac.element = 53; ac.aromatic = false; break;
      case 'b': ac.element = 5; ac.aromatic = true; break;
      case 'c': ac.element = 6; ac.aromatic = true; break;
      case 'n': ac.element = 7; ac.aromatic = true; break;
      case 'o': ac.element = 8; ac.aromatic = true; break;
      case 'p': ac.element = 15; ac.aromatic = true; break;
      case 's': ac.element = 16; ac.aromatic = true; break;
      default: unsupported(std::string(1, c), start);
    }
    ++pos_;
    add_node(ac);
  }

  int read_number(int fallback) {
    if (!std::isdigit(static_cast<unsigned char>(peek()))) return fallback;
    int v = 0;
    while (std::isdigit(static_cast<unsigned char>(peek()))) {
      v = v * 10 + (peek() - '0');
      ++pos_;
    }
    return v;
  }

  void bracket() {
    const std::size_t open = pos_;
    ++pos_;
    AtomConstraint ac;
    bool any_primitive = false;
    while (true) {
      const char c = peek();
      const std::size_t at = pos_;
      if (c == '\0') throw ParseError("unterminated bracket atom", open);
      if (c == ']') {
        ++pos_;
        break;
      }
      if (c == '&' || c == ';') {
        if (!any_primitive) throw ParseError("operator without operand", at);
        ++pos_;
        continue;
      }
      any_primitive = true;
      if (c == '#') {
        ++pos_;
        if (!std::isdigit(static_cast<unsigned char>(peek()))) throw ParseError("expected atomic number", pos_);
        ac.element = read_number(0);
        continue;
      }
      if (c == 'H') {
        if (!ac.element && !ac.aromatic && s_.substr(pos_ + 1, 1) == "]") unsupported("H", at);
        ++pos_;
        ac.h_count = read_number(1);
        continue;
      }
      if (c == 'X') {
        ++pos_;
        ac.connectivity = read_number(1);
        continue;
      }
      if (c == 'R') {
        ++pos_;
        const int r = read_number(-1);
        if (r == -1) {
          ac.in_ring = true;
        } else if (r == 0) {
          ac.in_ring = false;
        } else {
          unsupported("R" + std::to_string(r), at);
        }
        continue;
      }
      if (c == '+' || c == '-') {
        int mag = 0;
        while (peek() == c) {
          ++mag;
          ++pos_;
        }
        if (mag == 1) mag = read_number(1);
        ac.formal_charge = c == '+' ? mag : -mag;
        continue;
      }
      if (c == '*') {
        ++pos_;
        continue;
      }
      if (c == 'A' || c == 'a') {
        ++pos_;
        ac.aromatic = c == 'a';
        continue;
      }
      if (std::isupper(static_cast<unsigned char>(c))) {
        std::string sym(1, c);
        if (std::islower(static_cast<unsigned char>(s_.size() > pos_ + 1 ? s_[pos_ + 1] : '\0')) &&
            atomic_number(std::string{c, s_[pos_ + 1]}) != 0) {
          sym += s_[pos_ + 1];
        }
        const int z = atomic_number(sym);
        if (z == 0 || sym == "D") unsupported(sym, at);
        pos_ += sym.size();
        ac.element = z;
        ac.aromatic = false;
        continue;
      }
      if (c == 'c' || c == 'n' || c == 'o' || c == 's' || c == 'p' || c == 'b') {
        ++pos_;
        ac.element = atomic_number(std::string(1, static_cast<char>(std::toupper(c))));
        ac.aromatic = true;
        continue;
      }
      unsupported(std::string(1, c), at);
    }
    if (!any_primitive) throw ParseError("empty bracket atom", open);
    add_node(ac);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::vector<AtomConstraint> nodes_;
  std::vector<PatternEdge> edges_;
  std::vector<std::pair<int, std::size_t>> branches_;
  std::map<int, RingOpen> rings_;
  int prev_ = -1;
  std::optional<BondConstraint> pending_;
  std::size_t pending_offset_ = 0;
};

}  // namespace

Pattern parse_pattern(std::string_view smarts) { return SmartsParser(smarts).parse(); }

Pattern pattern_from_graph(const MolecularGraph& g) {
  std::vector<AtomConstraint> nodes;
  for (const Atom& a : g.atoms()) {
    AtomConstraint c;
    c.element = a.element;
    c.aromatic = a.aromatic;
    c.formal_charge = a.formal_charge;
    nodes.push_back(c);
  }
  std::vector<PatternEdge> edges;
  for (const Bond& b : g.bonds()) {
    BondConstraint bc = BondConstraint::Single;
    switch (b.order) {
      case BondOrder::Single: bc = BondConstraint::Single; break;
      case BondOrder::Double: bc = BondConstraint::Double; break;
      case BondOrder::Triple: bc = BondConstraint::Triple; break;
      case BondOrder::Aromatic: bc = BondConstraint::Aromatic; break;
    }
    edges.push_back({b.begin, b.end, bc});
  }
  return Pattern(std::move(nodes), std::move(edges), to_smiles(g, {.hydrogens = false}));
}

std::vector<NamedPattern> read_pattern_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UserError("cannot open pattern file '" + path + "'");
  std::vector<NamedPattern> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    std::string id, smarts;
    fields >> id >> smarts;
    if (smarts.empty()) throw UserError(path + ":" + std::to_string(line_no) + ": expected 'id SMARTS'");
    try {
      out.push_back({id, parse_pattern(smarts)});
    } catch (const UserError& e) {
      throw UserError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace molexplain::chem
