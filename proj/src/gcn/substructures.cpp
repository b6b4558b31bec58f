#include <algorithm>
#include <map>

#include "molexplain/gcn.hpp"
#include "molexplain/pattern.hpp"

namespace molexplain::gcn {

std::vector<SubstructureScore> score_substructures(const GraphConvNet& net, const chem::MolecularGraph& g,
                                                   std::size_t task, std::size_t molecule_id) {
  if (g.empty()) throw UserError("cannot score substructures of an empty molecule");
  if (task >= net.spec().n_tasks) throw UserError("task index out of range");
  const Matrix inputs = net.atom_head_inputs(g, net.featurizer().featurize(g));
  nn::DenseCache cache;
  net.head().forward_batch(inputs, cache);
  const int radius = static_cast<int>(net.spec().layer_count());
  std::vector<SubstructureScore> out;
  out.reserve(g.atom_count());
  for (int v = 0; v < static_cast<int>(g.atom_count()); ++v) {
    SubstructureScore s;
    s.molecule = molecule_id;
    s.center = v;
    s.radius = radius;
    s.score = cache.outputs(static_cast<std::size_t>(v), task);
    s.atoms = chem::atoms_within(g, v, radius);
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

chem::MolecularGraph normalized_fragment(const chem::MolecularGraph& g, const std::vector<int>& atoms) {
  chem::MolecularGraph frag = chem::induced_subgraph(g, atoms);
  for (int v = 0; v < static_cast<int>(frag.atom_count()); ++v) {
    frag.atom(v).implicit_h = 0;
    frag.atom(v).ring_member = false;
  }
  for (int b = 0; b < static_cast<int>(frag.bond_count()); ++b) frag.bond(b).ring = false;
  return frag;
}

}  // namespace

std::string fragment_smiles(const chem::MolecularGraph& g, const std::vector<int>& atoms) {
  return chem::to_smiles(normalized_fragment(g, atoms), {.hydrogens = false});
}

std::vector<ExtractedFragment> extract_top_substructures(const GraphConvNet& net,
                                                         const std::vector<chem::MolecularGraph>& validation,
                                                         const GraphData& test, std::size_t task, std::size_t k) {
  if (test.y.rows() != test.graphs.size()) throw UserError("test labels do not match test molecules");
  std::map<std::string, ExtractedFragment> best;
  for (std::size_t m = 0; m < validation.size(); ++m) {
    if (validation[m].empty()) continue;
    for (SubstructureScore& s : score_substructures(net, validation[m], task, m)) {
      chem::MolecularGraph frag = normalized_fragment(validation[m], s.atoms);
      std::string key = chem::to_smiles(frag, {.hydrogens = false});
      auto it = best.find(key);
      if (it != best.end() && it->second.score >= s.score) continue;
      ExtractedFragment e;
      e.smiles = key;
      e.score = s.score;
      e.source_molecule = m;
      e.best = std::move(s);
      e.fragment = std::move(frag);
      best.insert_or_assign(std::move(key), std::move(e));
    }
  }
  std::vector<ExtractedFragment> ranked;
  ranked.reserve(best.size());
  for (auto& [key, e] : best) ranked.push_back(std::move(e));
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const ExtractedFragment& a, const ExtractedFragment& b) { return a.score > b.score; });
  if (ranked.size() > k) ranked.resize(k);

  for (ExtractedFragment& e : ranked) {
    const chem::Pattern pattern = chem::pattern_from_graph(e.fragment);
    for (std::size_t m = 0; m < test.graphs.size(); ++m) {
      if (test.y.missing(m, task)) continue;
      if (!chem::has_match(pattern, test.graphs[m])) continue;
      ++e.support;
      if (test.y.at(m, task) == 1) ++e.positives;
    }
    if (e.support > 0) e.ppv = static_cast<double>(e.positives) / static_cast<double>(e.support);
    e.low_support = e.support < kMinPpvSupport;
  }
  return ranked;
}

}  // namespace molexplain::gcn
