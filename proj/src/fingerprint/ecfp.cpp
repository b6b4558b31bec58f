#include <algorithm>
#include <set>

#include "molexplain/fingerprint.hpp"
#include "molexplain/rng.hpp"

namespace molexplain::fingerprint {

void FingerprintConfig::validate() const {
  if (radius < 0) throw UserError("fingerprint radius must be non-negative");
  if (n_bits == 0 || (n_bits & (n_bits - 1)) != 0) throw UserError("fingerprint length must be a power of two");
}

std::vector<std::size_t> Fingerprint::on_bits() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i]) out.push_back(i);
  }
  return out;
}

std::size_t Fingerprint::count() const { return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), true)); }

std::vector<double> Fingerprint::dense() const {
  std::vector<double> out(bits_.size(), 0.0);
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i]) out[i] = 1.0;
  }
  return out;
}

void Fingerprint::add(std::size_t bit, Environment env) {
  bits_[bit] = true;
  provenance_[bit].push_back(std::move(env));
}

std::uint64_t hash_words(std::span<const std::uint64_t> words) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (std::uint64_t w : words) h = splitmix64(h ^ w);
  return splitmix64(h ^ static_cast<std::uint64_t>(words.size()));
}

namespace {

std::uint64_t initial_identifier(const chem::MolecularGraph& g, int v) {
  const chem::Atom& a = g.atom(v);
  const std::uint64_t words[] = {static_cast<std::uint64_t>(a.element),
                                 static_cast<std::uint64_t>(g.degree(v)),
                                 static_cast<std::uint64_t>(a.implicit_h),
                                 static_cast<std::uint64_t>(static_cast<std::int64_t>(a.formal_charge) + 128),
                                 a.ring_member ? 1ULL : 0ULL,
                                 a.aromatic ? 1ULL : 0ULL};
  return hash_words(words);
}

using BondSet = std::vector<bool>;

}  // namespace

std::vector<std::vector<std::uint64_t>> atom_identifiers(const chem::MolecularGraph& g, int radius) {
  const int n = static_cast<int>(g.atom_count());
  std::vector<std::vector<std::uint64_t>> rounds;
  std::vector<std::uint64_t> ids(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) ids[static_cast<std::size_t>(v)] = initial_identifier(g, v);
  rounds.push_back(ids);
  for (int r = 1; r <= radius; ++r) {
    std::vector<std::uint64_t> next(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) {
      std::vector<std::pair<std::uint64_t, std::uint64_t>> nbrs;
      for (const chem::Neighbor& nb : g.neighbors(v)) {
        nbrs.push_back({static_cast<std::uint64_t>(g.bond(nb.bond).order), ids[static_cast<std::size_t>(nb.atom)]});
      }
      std::sort(nbrs.begin(), nbrs.end());
      std::vector<std::uint64_t> words{static_cast<std::uint64_t>(r), ids[static_cast<std::size_t>(v)]};
      for (const auto& [order, id] : nbrs) {
        words.push_back(order);
        words.push_back(id);
      }
      next[static_cast<std::size_t>(v)] = hash_words(words);
    }
    ids = std::move(next);
    rounds.push_back(ids);
  }
  return rounds;
}

Fingerprint ecfp(const chem::MolecularGraph& g, const FingerprintConfig& cfg) {
  cfg.validate();
  const int n = static_cast<int>(g.atom_count());
  const std::uint64_t mask = cfg.n_bits - 1;
  Fingerprint fp(cfg.n_bits);
  const auto rounds = atom_identifiers(g, cfg.radius);

  std::vector<BondSet> env_bonds(static_cast<std::size_t>(n), BondSet(g.bond_count(), false));
  std::vector<std::vector<int>> env_atoms(static_cast<std::size_t>(n));
  std::set<BondSet> seen;
  seen.insert(BondSet(g.bond_count(), false));
  for (int v = 0; v < n; ++v) {
    env_atoms[static_cast<std::size_t>(v)] = {v};
    fp.add(rounds[0][static_cast<std::size_t>(v)] & mask, Environment{v, 0, {v}});
  }

  for (int r = 1; r <= cfg.radius; ++r) {
    std::vector<BondSet> next_bonds = env_bonds;
    for (int v = 0; v < n; ++v) {
      BondSet& b = next_bonds[static_cast<std::size_t>(v)];
      for (const chem::Neighbor& nb : g.neighbors(v)) {
        b[static_cast<std::size_t>(nb.bond)] = true;
        const BondSet& inner = env_bonds[static_cast<std::size_t>(nb.atom)];
        for (std::size_t i = 0; i < inner.size(); ++i) {
          if (inner[i]) b[i] = true;
        }
      }
    }
    env_bonds = std::move(next_bonds);

    // Same-round duplicates keep the smallest identifier.
    std::map<BondSet, std::pair<std::uint64_t, int>> round_best;
    for (int v = 0; v < n; ++v) {
      const BondSet& b = env_bonds[static_cast<std::size_t>(v)];
      if (seen.count(b)) continue;
      const std::pair<std::uint64_t, int> cand{rounds[static_cast<std::size_t>(r)][static_cast<std::size_t>(v)], v};
      auto it = round_best.find(b);
      if (it == round_best.end() || cand < it->second) round_best[b] = cand;
    }
    std::vector<std::pair<std::uint64_t, int>> kept;
    for (auto& [bonds, cand] : round_best) {
      seen.insert(bonds);
      kept.push_back(cand);
    }
    std::sort(kept.begin(), kept.end());
    for (const auto& [id, v] : kept) {
      std::vector<int> atoms{v};
      const BondSet& b = env_bonds[static_cast<std::size_t>(v)];
      for (std::size_t i = 0; i < b.size(); ++i) {
        if (!b[i]) continue;
        atoms.push_back(g.bond(static_cast<int>(i)).begin);
        atoms.push_back(g.bond(static_cast<int>(i)).end);
      }
      std::sort(atoms.begin(), atoms.end());
      atoms.erase(std::unique(atoms.begin(), atoms.end()), atoms.end());
      fp.add(id & mask, Environment{v, r, std::move(atoms)});
    }
  }
  return fp;
}

std::map<std::size_t, std::vector<int>> atoms_for_bits(const Fingerprint& fp, std::span<const std::size_t> bits) {
  std::map<std::size_t, std::vector<int>> out;
  for (std::size_t bit : bits) {
    if (bit >= fp.size()) throw UserError("bit index " + std::to_string(bit) + " out of range");
    std::vector<int>& atoms = out[bit];
    auto it = fp.provenance().find(bit);
    if (it == fp.provenance().end()) continue;
    for (const Environment& env : it->second) atoms.insert(atoms.end(), env.atoms.begin(), env.atoms.end());
    std::sort(atoms.begin(), atoms.end());
    atoms.erase(std::unique(atoms.begin(), atoms.end()), atoms.end());
  }
  return out;
}

}  // namespace molexplain::fingerprint
