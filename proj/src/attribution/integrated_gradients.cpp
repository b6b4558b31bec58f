#include <algorithm>
#include <cmath>
#include <numeric>

#include "molexplain/attribution.hpp"
#include "molexplain/kernels.hpp"

namespace molexplain::attribution {

namespace {

constexpr std::size_t kChunk = 128;

// Network without its first layer, fed with first-layer activations.
nn::DenseNet tail_of(const nn::DenseNet& net) {
  nn::DenseSpec spec = net.spec();
  spec.input_dim = spec.hidden.front();
  spec.hidden.erase(spec.hidden.begin());
  nn::DenseNet tail(spec);
  for (std::size_t l = 1; l < net.layers().size(); ++l) tail.layers()[l - 1] = net.layers()[l];
  return tail;
}

}  // namespace

// The first layer's pre-activation is affine along the straight path, so it
// is computed once; the input gradient sum is W0^T applied to the summed
// first-layer deltas.
std::vector<double> integrated_gradients(const nn::DenseNet& net, std::span<const double> x,
                                         std::span<const double> baseline, int steps, std::size_t task,
                                         const IgOptions& options) {
  const std::size_t dim = net.input_dim();
  if (x.size() != dim || baseline.size() != dim) {
    throw UserError("attribution input has " + std::to_string(x.size()) + " features, baseline " +
                    std::to_string(baseline.size()) + ", network expects " + std::to_string(dim));
  }
  if (steps < 1) throw UserError("integration steps must be at least 1");
  if (task >= net.n_tasks()) throw UserError("task index out of range");

  const auto& k = kernels::active();
  const nn::DenseLayer& first = net.layers().front();
  const std::size_t width = first.weight.rows();
  std::vector<double> diff(dim);
  for (std::size_t i = 0; i < dim; ++i) diff[i] = x[i] - baseline[i];
  std::vector<double> start(width), slope(width);
  for (std::size_t j = 0; j < width; ++j) {
    start[j] = k.dot(first.weight.row(j).data(), baseline.data(), dim) + first.bias[j];
    slope[j] = k.dot(first.weight.row(j).data(), diff.data(), dim);
  }

  std::vector<double> alphas, weights;
  const double m = steps;
  if (options.trapezoid) {
    for (int s = 0; s <= steps; ++s) {
      alphas.push_back(s / m);
      weights.push_back((s == 0 || s == steps) ? 0.5 / m : 1.0 / m);
    }
  } else {
    for (int s = 1; s <= steps; ++s) {
      alphas.push_back(s / m);
      weights.push_back(1.0 / m);
    }
  }

  const bool linear = net.hidden_count() == 0;
  const nn::Activation act = net.spec().hidden_activation;
  std::optional<nn::DenseNet> tail;
  if (!linear) tail = tail_of(net);

  std::vector<double> delta_sum(width, 0.0);
  nn::DenseCache cache;
  Matrix dlogits, dh;
  for (std::size_t c0 = 0; c0 < alphas.size(); c0 += kChunk) {
    const std::size_t len = std::min(kChunk, alphas.size() - c0);
    Matrix z(len, width);
    for (std::size_t b = 0; b < len; ++b) {
      for (std::size_t j = 0; j < width; ++j) z(b, j) = start[j] + alphas[c0 + b] * slope[j];
    }
    if (linear) {
      for (std::size_t b = 0; b < len; ++b) {
        delta_sum[task] +=
            weights[c0 + b] * nn::output_derivative(net.spec().output_activation, z(b, task), options.mode);
      }
      continue;
    }
    Matrix h(len, width);
    for (std::size_t i = 0; i < z.size(); ++i) h.data()[i] = nn::activate(act, z.data()[i]);
    tail->forward_batch(h, cache);
    dlogits.resize(len, net.n_tasks());
    for (std::size_t b = 0; b < len; ++b) {
      dlogits(b, task) = nn::output_derivative(net.spec().output_activation, cache.pre.back()(b, task), options.mode);
    }
    tail->backward_batch(cache, dlogits, nullptr, &dh);
    for (std::size_t b = 0; b < len; ++b) {
      for (std::size_t j = 0; j < width; ++j) {
        delta_sum[j] += weights[c0 + b] * dh(b, j) * nn::activate_derivative(act, z(b, j));
      }
    }
  }

  std::vector<double> grad(dim, 0.0);
  for (std::size_t j = 0; j < width; ++j) {
    if (delta_sum[j] != 0.0) k.axpy(delta_sum[j], first.weight.row(j).data(), grad.data(), dim);
  }
  std::vector<double> out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = diff[i] * grad[i];
  return out;
}

AttributionResult attribute(const nn::DenseNet& net, std::span<const double> x, std::span<const double> baseline,
                            int steps, std::size_t task, const IgOptions& options) {
  AttributionResult r;
  r.per_feature = integrated_gradients(net, x, baseline, steps, task, options);
  r.task = task;
  r.baseline.assign(baseline.begin(), baseline.end());
  r.steps = steps;
  r.f_x = net.output(x, task, options.mode);
  r.f_baseline = net.output(baseline, task, options.mode);
  const double total = std::accumulate(r.per_feature.begin(), r.per_feature.end(), 0.0);
  r.completeness_gap = std::abs(total - (r.f_x - r.f_baseline));
  return r;
}

AttributionResult attribute_molecule(const nn::DenseNet& net, const chem::MolecularGraph& g,
                                     const fingerprint::FingerprintConfig& fp_cfg, int steps, std::size_t task,
                                     const IgOptions& options) {
  const fingerprint::Fingerprint fp = fingerprint::ecfp(g, fp_cfg);
  const std::vector<double> x = fp.dense();
  const std::vector<double> zero(x.size(), 0.0);
  AttributionResult r = attribute(net, x, zero, steps, task, options);
  r.per_atom = atomwise(fp, r.per_feature, g.atom_count());
  return r;
}

std::vector<double> atomwise(const fingerprint::Fingerprint& fp, std::span<const double> per_feature,
                             std::size_t atom_count) {
  if (per_feature.size() != fp.size()) throw UserError("attribution length does not match fingerprint length");
  std::vector<double> out(atom_count, 0.0);
  std::vector<char> seen(atom_count);
  for (const auto& [bit, envs] : fp.provenance()) {
    std::fill(seen.begin(), seen.end(), 0);
    for (const auto& env : envs) {
      for (int a : env.atoms) {
        const auto v = static_cast<std::size_t>(a);
        if (v >= atom_count) throw UserError("fingerprint provenance refers to a missing atom");
        if (seen[v]) continue;
        seen[v] = 1;
        out[v] += per_feature[bit];
      }
    }
  }
  return out;
}

}  // namespace molexplain::attribution
