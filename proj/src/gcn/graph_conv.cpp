#include <algorithm>
#include <cmath>
#include <cstdio>

#include "molexplain/gcn.hpp"
#include "molexplain/kernels.hpp"
#include "molexplain/rng.hpp"

namespace molexplain::gcn {

std::size_t GcnSpec::head_input_dim() const {
  if (!skip_connections) return conv_widths.empty() ? input_dim : conv_widths.back();
  std::size_t total = input_dim;
  for (std::size_t w : conv_widths) total += w;
  return total;
}

GcnSpec ames_gcn_preset(std::size_t filters, std::size_t fc, std::size_t n_tasks) {
  GcnSpec spec;
  spec.input_dim = AtomFeaturizer().dim();
  spec.conv_widths = {filters, filters, filters};
  spec.head_hidden = {fc};
  spec.n_tasks = n_tasks;
  return spec;
}

GcnSpec gcn_preset(const std::string& name, std::size_t n_tasks) {
  unsigned layers = 0, filters = 0, fc = 0;
  char tail = 0;
  if (std::sscanf(name.c_str(), "ames-gcn-%ux%u-fc%u%c", &layers, &filters, &fc, &tail) != 3 || layers == 0 ||
      filters == 0 || fc == 0) {
    throw UserError("unknown graph preset '" + name + "'");
  }
  GcnSpec spec = ames_gcn_preset(filters, fc, n_tasks);
  spec.conv_widths.assign(layers, filters);
  return spec;
}

void GcnGradients::zero() {
  for (Matrix& w : weight) w.fill(0.0);
  for (auto& b : bias) b.assign(b.size(), 0.0);
  head.zero();
}

std::vector<std::span<double>> GcnGradients::spans() {
  std::vector<std::span<double>> out;
  for (std::size_t l = 0; l < weight.size(); ++l) {
    out.push_back(weight[l].flat());
    out.push_back(bias[l]);
  }
  for (auto s : head.spans()) out.push_back(s);
  return out;
}

GraphConvNet::GraphConvNet(GcnSpec spec) : spec_(std::move(spec)) {
  if (spec_.input_dim == 0) throw UserError("graph network input dimension must be positive");
  std::size_t in = spec_.input_dim;
  for (std::size_t w : spec_.conv_widths) {
    if (w == 0) throw UserError("convolution width must be positive");
    conv_.push_back({Matrix(w, 2 * in), std::vector<double>(w, 0.0)});
    in = w;
  }
  nn::DenseSpec head_spec;
  head_spec.input_dim = spec_.head_input_dim();
  head_spec.hidden = spec_.head_hidden;
  head_spec.n_tasks = spec_.n_tasks;
  head_spec.hidden_activation = spec_.head_activation;
  head_ = nn::DenseNet(head_spec);
}

GraphConvNet GraphConvNet::initialized(const GcnSpec& spec, std::uint64_t seed) {
  GraphConvNet net(spec);
  Rng rng(seed);
  for (ConvLayer& layer : net.conv_) {
    const double scale = std::sqrt(2.0 / static_cast<double>(layer.weight.cols()));
    for (double& w : layer.weight.flat()) w = scale * rng.normal();
  }
  net.head_ = nn::DenseNet::initialized(net.head_.spec(), splitmix64(seed ^ 0x4ead));
  return net;
}

bool operator==(const GraphConvNet& a, const GraphConvNet& b) {
  if (!(a.spec_ == b.spec_) || !(a.head_ == b.head_)) return false;
  for (std::size_t l = 0; l < a.conv_.size(); ++l) {
    if (!(a.conv_[l].weight == b.conv_[l].weight) || a.conv_[l].bias != b.conv_[l].bias) return false;
  }
  return true;
}

GraphBatch GraphBatch::from_graphs(const std::vector<const chem::MolecularGraph*>& graphs, const AtomFeaturizer& f) {
  GraphBatch batch;
  batch.molecules = graphs.size();
  std::size_t total = 0;
  batch.atom_offset.push_back(0);
  for (const auto* g : graphs) {
    if (g->empty()) throw UserError("graph network input has no atoms");
    total += g->atom_count();
    batch.atom_offset.push_back(total);
  }
  batch.features.resize(total, f.dim());
  batch.neighbors.resize(total);
  for (std::size_t m = 0; m < graphs.size(); ++m) {
    const chem::MolecularGraph& g = *graphs[m];
    const std::size_t base = batch.atom_offset[m];
    const Matrix feats = f.featurize(g);
    std::copy(feats.data(), feats.data() + feats.size(), batch.features.row(base).data());
    for (int v = 0; v < static_cast<int>(g.atom_count()); ++v) {
      auto& nbrs = batch.neighbors[base + static_cast<std::size_t>(v)];
      for (const chem::Neighbor& nb : g.neighbors(v)) nbrs.push_back(static_cast<int>(base) + nb.atom);
    }
  }
  return batch;
}

GraphBatch GraphBatch::from_features(const chem::MolecularGraph& g, const Matrix& features) {
  if (g.empty()) throw UserError("graph network input has no atoms");
  if (features.rows() != g.atom_count()) throw UserError("feature rows do not match atom count");
  GraphBatch batch;
  batch.molecules = 1;
  batch.atom_offset = {0, g.atom_count()};
  batch.features = features;
  batch.neighbors.resize(g.atom_count());
  for (int v = 0; v < static_cast<int>(g.atom_count()); ++v) {
    for (const chem::Neighbor& nb : g.neighbors(v)) batch.neighbors[static_cast<std::size_t>(v)].push_back(nb.atom);
  }
  return batch;
}

void GraphConvNet::atom_pass(const GraphBatch& batch, GcnCache& cache) const {
  if (batch.features.cols() != spec_.input_dim) throw UserError("atom feature width does not match network input");
  const auto& k = kernels::active();
  const std::size_t atoms = batch.features.rows();
  const std::size_t layers = conv_.size();
  cache.atom_reps.resize(layers + 1);
  cache.pairs.resize(layers);
  cache.pair_pre.resize(layers);
  cache.pair_offset.resize(layers);
  cache.pair_partner.resize(layers);
  cache.neighbor_argmax.resize(layers);
  cache.atom_reps[0] = batch.features;

  for (std::size_t l = 0; l < layers; ++l) {
    const ConvLayer& layer = conv_[l];
    const Matrix& h = cache.atom_reps[l];
    const std::size_t d = h.cols();
    const std::size_t out = layer.weight.rows();
    auto& offset = cache.pair_offset[l];
    auto& partner = cache.pair_partner[l];
    offset.assign(1, 0);
    partner.clear();
    for (std::size_t v = 0; v < atoms; ++v) {
      if (batch.neighbors[v].empty()) {
        partner.push_back(-1);
      } else {
        partner.insert(partner.end(), batch.neighbors[v].begin(), batch.neighbors[v].end());
      }
      offset.push_back(partner.size());
    }
    const std::size_t n_pairs = partner.size();
    Matrix& pairs = cache.pairs[l];
    pairs.resize(n_pairs, 2 * d);
    for (std::size_t v = 0; v < atoms; ++v) {
      for (std::size_t p = offset[v]; p < offset[v + 1]; ++p) {
        double* row = pairs.row(p).data();
        std::copy_n(h.row(v).data(), d, row);
        if (partner[p] >= 0) std::copy_n(h.row(static_cast<std::size_t>(partner[p])).data(), d, row + d);
      }
    }
    Matrix& z = cache.pair_pre[l];
    z.resize(n_pairs, out);
    k.gemm_nt(n_pairs, out, 2 * d, pairs.data(), layer.weight.data(), z.data());
    for (std::size_t p = 0; p < n_pairs; ++p) {
      for (std::size_t c = 0; c < out; ++c) z(p, c) += layer.bias[c];
    }

    Matrix& next = cache.atom_reps[l + 1];
    next.resize(atoms, out);
    auto& argmax = cache.neighbor_argmax[l];
    if (spec_.pooling == Pooling::Max) argmax.assign(atoms * out, 0);
    for (std::size_t v = 0; v < atoms; ++v) {
      const std::size_t begin = offset[v];
      const std::size_t end = offset[v + 1];
      for (std::size_t c = 0; c < out; ++c) {
        if (spec_.pooling == Pooling::Max) {
          std::size_t best = begin;
          double best_val = std::max(z(begin, c), 0.0);
          for (std::size_t p = begin + 1; p < end; ++p) {
            const double a = std::max(z(p, c), 0.0);
            if (a > best_val) {
              best_val = a;
              best = p;
            }
          }
          next(v, c) = best_val;
          argmax[v * out + c] = best;
        } else {
          double s = 0.0;
          for (std::size_t p = begin; p < end; ++p) s += std::max(z(p, c), 0.0);
          if (spec_.pooling == Pooling::Mean) s /= static_cast<double>(end - begin);
          next(v, c) = s;
        }
      }
    }
  }
}

void GraphConvNet::forward_batch(const GraphBatch& batch, GcnCache& cache) const {
  atom_pass(batch, cache);
  const std::size_t layers = conv_.size();
  const std::size_t first = spec_.skip_connections ? 0 : layers;
  cache.graph_reps.resize(batch.molecules, spec_.head_input_dim());
  cache.graph_argmax.assign(layers + 1, {});
  std::size_t col = 0;
  for (std::size_t l = first; l <= layers; ++l) {
    const Matrix& h = cache.atom_reps[l];
    const std::size_t d = h.cols();
    auto& argmax = cache.graph_argmax[l];
    if (spec_.pooling == Pooling::Max) argmax.assign(batch.molecules * d, 0);
    for (std::size_t m = 0; m < batch.molecules; ++m) {
      const std::size_t begin = batch.atom_offset[m];
      const std::size_t end = batch.atom_offset[m + 1];
      for (std::size_t c = 0; c < d; ++c) {
        double value = 0.0;
        if (spec_.pooling == Pooling::Max) {
          std::size_t best = begin;
          value = h(begin, c);
          for (std::size_t v = begin + 1; v < end; ++v) {
            if (h(v, c) > value) {
              value = h(v, c);
              best = v;
            }
          }
          argmax[m * d + c] = best;
        } else {
          for (std::size_t v = begin; v < end; ++v) value += h(v, c);
          if (spec_.pooling == Pooling::Mean) value /= static_cast<double>(end - begin);
        }
        cache.graph_reps(m, col + c) = value;
      }
    }
    col += d;
  }
  head_.forward_batch(cache.graph_reps, cache.head);
}

void GraphConvNet::backward_batch(const GraphBatch& batch, const GcnCache& cache, const Matrix& dlogits,
                                  GcnGradients* grads, Matrix* dfeatures) const {
  const auto& k = kernels::active();
  const std::size_t layers = conv_.size();
  const std::size_t atoms = batch.features.rows();
  Matrix dgraph;
  head_.backward_batch(cache.head, dlogits, grads != nullptr ? &grads->head : nullptr, &dgraph);

  std::vector<Matrix> dh(layers + 1);
  for (std::size_t l = 0; l <= layers; ++l) dh[l].resize(atoms, cache.atom_reps[l].cols());

  const std::size_t first = spec_.skip_connections ? 0 : layers;
  std::size_t col = 0;
  for (std::size_t l = first; l <= layers; ++l) {
    const std::size_t d = cache.atom_reps[l].cols();
    for (std::size_t m = 0; m < batch.molecules; ++m) {
      const std::size_t begin = batch.atom_offset[m];
      const std::size_t end = batch.atom_offset[m + 1];
      for (std::size_t c = 0; c < d; ++c) {
        const double g = dgraph(m, col + c);
        if (spec_.pooling == Pooling::Max) {
          dh[l](cache.graph_argmax[l][m * d + c], c) += g;
        } else {
          const double share = spec_.pooling == Pooling::Mean ? g / static_cast<double>(end - begin) : g;
          for (std::size_t v = begin; v < end; ++v) dh[l](v, c) += share;
        }
      }
    }
    col += d;
  }

  for (std::size_t l = layers; l-- > 0;) {
    const ConvLayer& layer = conv_[l];
    const std::size_t d = cache.atom_reps[l].cols();
    const std::size_t out = layer.weight.rows();
    const auto& offset = cache.pair_offset[l];
    const auto& partner = cache.pair_partner[l];
    const Matrix& z = cache.pair_pre[l];
    const std::size_t n_pairs = partner.size();
    Matrix dz(n_pairs, out);
    for (std::size_t v = 0; v < atoms; ++v) {
      const std::size_t begin = offset[v];
      const std::size_t end = offset[v + 1];
      for (std::size_t c = 0; c < out; ++c) {
        const double g = dh[l + 1](v, c);
        if (g == 0.0) continue;
        if (spec_.pooling == Pooling::Max) {
          const std::size_t p = cache.neighbor_argmax[l][v * out + c];
          if (z(p, c) > 0.0) dz(p, c) += g;
        } else {
          const double share = spec_.pooling == Pooling::Mean ? g / static_cast<double>(end - begin) : g;
          for (std::size_t p = begin; p < end; ++p) {
            if (z(p, c) > 0.0) dz(p, c) += share;
          }
        }
      }
    }
    if (grads != nullptr) {
      k.gemm_tn_acc(out, 2 * d, n_pairs, dz.data(), cache.pairs[l].data(), grads->weight[l].data());
      auto& gb = grads->bias[l];
      for (std::size_t p = 0; p < n_pairs; ++p) {
        for (std::size_t c = 0; c < out; ++c) gb[c] += dz(p, c);
      }
    }
    if (l == 0 && dfeatures == nullptr) break;
    Matrix dpairs(n_pairs, 2 * d);
    k.gemm_nn_acc(n_pairs, 2 * d, out, dz.data(), layer.weight.data(), dpairs.data());
    for (std::size_t v = 0; v < atoms; ++v) {
      for (std::size_t p = offset[v]; p < offset[v + 1]; ++p) {
        const double* row = dpairs.row(p).data();
        double* self = dh[l].row(v).data();
        for (std::size_t c = 0; c < d; ++c) self[c] += row[c];
        if (partner[p] >= 0) {
          double* other = dh[l].row(static_cast<std::size_t>(partner[p])).data();
          for (std::size_t c = 0; c < d; ++c) other[c] += row[d + c];
        }
      }
    }
  }
  if (dfeatures != nullptr) *dfeatures = std::move(dh[0]);
}

std::vector<double> GraphConvNet::forward_features(const chem::MolecularGraph& g, const Matrix& features) const {
  const GraphBatch batch = GraphBatch::from_features(g, features);
  GcnCache cache;
  forward_batch(batch, cache);
  return {cache.head.outputs.data(), cache.head.outputs.data() + cache.head.outputs.cols()};
}

std::vector<double> GraphConvNet::forward_molecule(const chem::MolecularGraph& g) const {
  if (g.empty()) throw UserError("cannot run the graph network on an empty molecule");
  return forward_features(g, featurizer_.featurize(g));
}

Matrix GraphConvNet::atom_head_inputs(const chem::MolecularGraph& g, const Matrix& features) const {
  const GraphBatch batch = GraphBatch::from_features(g, features);
  GcnCache cache;
  atom_pass(batch, cache);
  const std::size_t layers = conv_.size();
  const std::size_t width = spec_.head_input_dim();
  if (width != head_.input_dim()) throw UserError("head input width does not match convolution output");
  Matrix out(g.atom_count(), width);
  const std::size_t first = spec_.skip_connections ? 0 : layers;
  std::size_t col = 0;
  for (std::size_t l = first; l <= layers; ++l) {
    const Matrix& h = cache.atom_reps[l];
    for (std::size_t v = 0; v < g.atom_count(); ++v) std::copy_n(h.row(v).data(), h.cols(), out.row(v).data() + col);
    col += h.cols();
  }
  return out;
}

GcnGradients GraphConvNet::make_gradients() const {
  GcnGradients g;
  for (const ConvLayer& layer : conv_) {
    g.weight.emplace_back(layer.weight.rows(), layer.weight.cols());
    g.bias.emplace_back(layer.bias.size(), 0.0);
  }
  g.head = head_.make_gradients();
  return g;
}

std::vector<std::span<double>> GraphConvNet::parameters() {
  std::vector<std::span<double>> out;
  for (ConvLayer& layer : conv_) {
    out.push_back(layer.weight.flat());
    out.push_back(layer.bias);
  }
  for (auto s : head_.parameters()) out.push_back(s);
  return out;
}

}  // namespace molexplain::gcn
