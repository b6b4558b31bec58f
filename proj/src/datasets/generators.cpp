#include <algorithm>
#include <cmath>

#include "molexplain/datasets.hpp"
#include "molexplain/parallel.hpp"
#include "molexplain/pattern.hpp"
#include "molexplain/rng.hpp"

namespace molexplain::datasets {

namespace {

using chem::BondOrder;
using chem::MolecularGraph;

constexpr int kMaxAttempts = 1000;

int capacity(const MolecularGraph& g, int v) {
  const chem::Atom& a = g.atom(v);
  const std::vector<int> allowed = chem::allowed_valences(a.element, a.formal_charge);
  if (allowed.empty()) return 0;
  const int used = g.bond_valence(v);
  for (int val : allowed) {
    if (val >= used) return val - used;
  }
  return 0;
}

int pick_element(Rng& rng, bool oxygen, bool halogens) {
  const double u = rng.uniform();
  if (oxygen) {
    if (u < 0.62) return 6;
    if (u < 0.76) return 7;
    if (u < 0.86) return 8;
    if (u < 0.91) return 16;
  } else {
    if (u < 0.70) return 6;
    if (u < 0.84) return 7;
    if (u < 0.91) return 16;
  }
  if (!halogens) return 6;
  static constexpr int kHalogens[] = {9, 17, 35};
  return kHalogens[rng.below(3)];
}

std::vector<int> with_capacity(const MolecularGraph& g, int need) {
  std::vector<int> out;
  for (int v = 0; v < static_cast<int>(g.atom_count()); ++v) {
    if (capacity(g, v) >= need) out.push_back(v);
  }
  return out;
}

std::vector<int> distances_from(const MolecularGraph& g, int s) {
  std::vector<int> d(g.atom_count(), -1);
  std::vector<int> queue{s};
  d[static_cast<std::size_t>(s)] = 0;
  for (std::size_t i = 0; i < queue.size(); ++i) {
    for (const chem::Neighbor& nb : g.neighbors(queue[i])) {
      auto& dn = d[static_cast<std::size_t>(nb.atom)];
      if (dn < 0) {
        dn = d[static_cast<std::size_t>(queue[i])] + 1;
        queue.push_back(nb.atom);
      }
    }
  }
  return d;
}

// Random tree with occasional unsaturation and one optional 5/6-ring closure.
MolecularGraph random_scaffold(Rng& rng, int atoms, double ring_probability, bool oxygen) {
  MolecularGraph g;
  g.add_atom({.element = 6});
  while (static_cast<int>(g.atom_count()) < atoms) {
    std::vector<int> open = with_capacity(g, 1);
    if (open.empty()) break;
    const int parent = open[rng.below(open.size())];
    const int element = pick_element(rng, oxygen, g.atom_count() >= 2);
    const int child = g.add_atom({.element = element});
    BondOrder order = BondOrder::Single;
    const int room = std::min(capacity(g, parent), capacity(g, child));
    if (room >= 2 && rng.bernoulli(0.15)) order = BondOrder::Double;
    if (room >= 3 && rng.bernoulli(0.03)) order = BondOrder::Triple;
    g.add_bond(parent, child, order);
  }
  if (rng.bernoulli(ring_probability)) {
    std::vector<std::pair<int, int>> candidates;
    const std::vector<int> open = with_capacity(g, 1);
    for (std::size_t i = 0; i < open.size(); ++i) {
      const std::vector<int> d = distances_from(g, open[i]);
      for (std::size_t j = i + 1; j < open.size(); ++j) {
        const int dist = d[static_cast<std::size_t>(open[j])];
        if (dist == 4 || dist == 5) candidates.emplace_back(open[i], open[j]);
      }
    }
    if (!candidates.empty()) {
      const auto [a, b] = candidates[rng.below(candidates.size())];
      g.add_bond(a, b, BondOrder::Single);
    }
  }
  return g;
}

struct Finished {
  std::string smiles;
  MolecularGraph graph;
};

// Hydrogens, aromaticity and rings as the parser would assign them; the
// molecule is then round-tripped through SMILES.
std::optional<Finished> finish(MolecularGraph g) {
  for (int v = 0; v < static_cast<int>(g.atom_count()); ++v) {
    const auto h = chem::default_implicit_h(g, v);
    if (!h) return std::nullopt;
    g.atom(v).implicit_h = *h;
  }
  chem::perceive_aromaticity(g);
  g.perceive_rings();
  Finished f;
  try {
    f.graph = chem::parse_smiles(chem::to_smiles(g));
  } catch (const UserError&) {
    return std::nullopt;
  }
  f.smiles = chem::to_smiles(f.graph);
  return f;
}

bool saturated_carbon(const MolecularGraph& g, int v) {
  const chem::Atom& a = g.atom(v);
  if (a.element != 6 || a.aromatic || a.formal_charge != 0) return false;
  for (const chem::Neighbor& nb : g.neighbors(v)) {
    if (g.bond(nb.bond).order != BondOrder::Single) return false;
  }
  return capacity(g, v) >= 1;
}

bool has_element(const MolecularGraph& g, int element) {
  for (const chem::Atom& a : g.atoms()) {
    if (a.element == element) return true;
  }
  return false;
}

// Adds the fragment's atoms and bonds; returns the index offset.
int embed(MolecularGraph& g, const MolecularGraph& frag) {
  const int base = static_cast<int>(g.atom_count());
  for (const chem::Atom& a : frag.atoms()) {
    chem::Atom copy = a;
    copy.implicit_h = 0;
    copy.ring_member = false;
    g.add_atom(copy);
  }
  for (const chem::Bond& b : frag.bonds()) g.add_bond(base + b.begin, base + b.end, b.order);
  return base;
}

const chem::Pattern& alcohol_pattern() {
  static const chem::Pattern p = chem::parse_pattern(kAlcoholSmarts);
  return p;
}

const chem::Pattern& acid_pattern() {
  static const chem::Pattern p = chem::parse_pattern(kCarboxylicAcidSmarts);
  return p;
}

enum class ToyClass { Positive, Negative, Acid };

std::optional<Finished> toy_molecule(Rng& rng, ToyClass cls, const AlcoholConfig& cfg) {
  const int total = rng.range(cfg.min_atoms, cfg.max_atoms);
  switch (cls) {
    case ToyClass::Negative: {
      auto f = finish(random_scaffold(rng, total, cfg.ring_probability, false));
      if (!f || has_element(f->graph, 8) || static_cast<int>(f->graph.atom_count()) != total) return std::nullopt;
      return f;
    }
    case ToyClass::Positive: {
      const int hydroxy = total >= 4 && rng.bernoulli(0.2) ? 2 : 1;
      MolecularGraph g = random_scaffold(rng, total - hydroxy, cfg.ring_probability, false);
      for (int k = 0; k < hydroxy; ++k) {
        std::vector<int> sites;
        for (int v = 0; v < static_cast<int>(g.atom_count()); ++v) {
          if (saturated_carbon(g, v)) sites.push_back(v);
        }
        if (sites.empty()) return std::nullopt;
        const int o = g.add_atom({.element = 8});
        g.add_bond(sites[rng.below(sites.size())], o, BondOrder::Single);
      }
      auto f = finish(std::move(g));
      if (!f || !chem::has_match(alcohol_pattern(), f->graph) || chem::has_match(acid_pattern(), f->graph)) {
        return std::nullopt;
      }
      return f;
    }
    case ToyClass::Acid: {
      MolecularGraph g = random_scaffold(rng, total - 3, cfg.ring_probability, false);
      const std::vector<int> sites = with_capacity(g, 1);
      if (sites.empty()) return std::nullopt;
      const int c = g.add_atom({.element = 6});
      const int o1 = g.add_atom({.element = 8});
      const int o2 = g.add_atom({.element = 8});
      g.add_bond(sites[rng.below(sites.size())], c, BondOrder::Single);
      g.add_bond(c, o1, BondOrder::Double);
      g.add_bond(c, o2, BondOrder::Single);
      auto f = finish(std::move(g));
      if (!f || !chem::has_match(acid_pattern(), f->graph) || chem::has_match(alcohol_pattern(), f->graph)) {
        return std::nullopt;
      }
      return f;
    }
  }
  return std::nullopt;
}

}  // namespace

void AlcoholConfig::validate() const {
  if (!seed) throw UserError("data generation requires an explicit seed");
  if (min_atoms < 1 || max_atoms < min_atoms) throw UserError("invalid size range");
  if (ring_probability < 0.0 || ring_probability > 1.0) throw UserError("ring probability must lie in [0, 1]");
  if (positives > 0 && max_atoms < 2) throw UserError("size range too small for a hydroxy group on carbon");
  if (acids > 0 && max_atoms < 4) throw UserError("size range too small for a carboxylic acid");
}

bool alcohol_label(const chem::MolecularGraph& g) {
  return chem::has_match(alcohol_pattern(), g) && !chem::has_match(acid_pattern(), g);
}

LabeledSet generate_alcohol_set(const AlcoholConfig& cfg) {
  cfg.validate();
  LabeledSet set;
  set.task_names = {"alcohol"};
  const std::size_t total = cfg.positives + cfg.negatives + cfg.acids;
  set.labels = LabelMatrix(total, 1);
  AlcoholConfig local = cfg;
  if (cfg.positives > 0) local.min_atoms = std::max(cfg.min_atoms, 2);
  std::vector<std::optional<Finished>> made(total);
  parallel_for(total, [&](std::size_t i) {
    const ToyClass cls = i < cfg.positives                   ? ToyClass::Positive
                         : i < cfg.positives + cfg.negatives ? ToyClass::Negative
                                                             : ToyClass::Acid;
    AlcoholConfig sized = local;
    if (cls == ToyClass::Acid) sized.min_atoms = std::max(cfg.min_atoms, 4);
    Rng rng = Rng::stream(*cfg.seed, i);
    std::optional<Finished>& f = made[i];
    for (int attempt = 0; attempt < kMaxAttempts && !f; ++attempt) f = toy_molecule(rng, cls, sized);
    if (!f) throw UserError("could not generate molecule " + std::to_string(i) + " within the size range");
  });
  for (std::size_t i = 0; i < total; ++i) {
    set.labels.set(i, 0, i < cfg.positives ? 1 : 0);
    set.smiles.push_back(std::move(made[i]->smiles));
    set.molecules.push_back(std::move(made[i]->graph));
  }
  return set;
}

void PlantedConfig::validate() const {
  if (!seed) throw UserError("data generation requires an explicit seed");
  if (patterns.empty()) throw UserError("planted generation needs at least one pattern");
  if (min_atoms < 1 || max_atoms < min_atoms) throw UserError("invalid size range");
  if (ring_probability < 0.0 || ring_probability > 1.0) throw UserError("ring probability must lie in [0, 1]");
  if (max_retries < 1) throw UserError("retry bound must be positive");
}

LabeledSet generate_planted_set(const PlantedConfig& cfg) {
  cfg.validate();
  std::vector<chem::MolecularGraph> fragments;
  std::vector<chem::Pattern> patterns;
  for (const std::string& p : cfg.patterns) {
    fragments.push_back(chem::parse_smiles(p, {.hydrogens = false}));
    patterns.push_back(chem::parse_pattern(p));
    if (static_cast<int>(fragments.back().atom_count()) + 1 > cfg.max_atoms) {
      throw UserError("planted pattern '" + p + "' does not fit the size range");
    }
  }
  auto any_pattern = [&](const MolecularGraph& g) {
    return std::any_of(patterns.begin(), patterns.end(), [&](const chem::Pattern& p) { return chem::has_match(p, g); });
  };

  LabeledSet set;
  set.task_names = {"planted"};
  const std::size_t total = cfg.positives + cfg.negatives;
  set.labels = LabelMatrix(total, 1);
  std::vector<std::optional<Finished>> made(total);
  parallel_for(total, [&](std::size_t i) {
    const bool positive = i < cfg.positives;
    Rng rng = Rng::stream(*cfg.seed, i);
    std::optional<Finished>& f = made[i];
    for (int attempt = 0; attempt < cfg.max_retries && !f; ++attempt) {
      const int size = rng.range(cfg.min_atoms, cfg.max_atoms);
      if (!positive) {
        f = finish(random_scaffold(rng, size, cfg.ring_probability, true));
        if (f && any_pattern(f->graph)) f.reset();
        continue;
      }
      const std::size_t which = i % fragments.size();
      const chem::MolecularGraph& frag = fragments[which];
      const int scaffold_size = std::max(1, size - static_cast<int>(frag.atom_count()));
      MolecularGraph g = random_scaffold(rng, scaffold_size, cfg.ring_probability, true);
      const int scaffold_atoms = static_cast<int>(g.atom_count());
      const int base = embed(g, frag);
      std::vector<int> frag_sites, scaffold_sites;
      for (int v = base; v < static_cast<int>(g.atom_count()); ++v) {
        if (capacity(g, v) >= 1) frag_sites.push_back(v);
      }
      for (int v = 0; v < scaffold_atoms; ++v) {
        if (capacity(g, v) >= 1) scaffold_sites.push_back(v);
      }
      if (frag_sites.empty() || scaffold_sites.empty()) continue;
      g.add_bond(scaffold_sites[rng.below(scaffold_sites.size())], frag_sites[rng.below(frag_sites.size())],
                 BondOrder::Single);
      f = finish(std::move(g));
      if (f && !chem::has_match(patterns[which], f->graph)) f.reset();
    }
    if (!f) {
      throw UserError(std::string(positive ? "could not embed a planted pattern" : "could not build a clean negative") +
                      " for molecule " + std::to_string(i) + " after " + std::to_string(cfg.max_retries) +
                      " attempts");
    }
  });
  for (std::size_t i = 0; i < total; ++i) {
    set.labels.set(i, 0, i < cfg.positives ? 1 : 0);
    set.smiles.push_back(std::move(made[i]->smiles));
    set.molecules.push_back(std::move(made[i]->graph));
  }
  return set;
}

}  // namespace molexplain::datasets
