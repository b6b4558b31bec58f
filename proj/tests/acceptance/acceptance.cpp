// Acceptance suite: one PASS/FAIL line per criterion, including its time
// budget. Exit status is non-zero when any criterion fails.
#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "molexplain/attribution.hpp"
#include "molexplain/datasets.hpp"
#include "molexplain/densenet.hpp"
#include "molexplain/fingerprint.hpp"
#include "molexplain/gcn.hpp"
#include "molexplain/kernels.hpp"
#include "molexplain/metrics.hpp"
#include "molexplain/parallel.hpp"
#include "molexplain/pattern.hpp"
#include "molexplain/unitscreen.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace {

using namespace molexplain;

struct Outcome {
  bool ok = false;
  std::string detail;
};

std::string format(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<std::size_t> rows_with(const std::vector<datasets::SplitTag>& tags, datasets::SplitTag tag) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i] == tag) rows.push_back(i);
  }
  return rows;
}

Matrix fingerprints(const std::vector<chem::MolecularGraph>& graphs, const std::vector<std::size_t>& rows,
                    const fingerprint::FingerprintConfig& cfg) {
  Matrix x(rows.size(), cfg.n_bits);
  parallel_for(rows.size(), [&](std::size_t i) {
    for (std::size_t b : fingerprint::ecfp(graphs[rows[i]], cfg).on_bits()) x(i, b) = 1.0;
  });
  return x;
}

std::vector<int> task_labels(const LabelMatrix& y) {
  std::vector<int> out(y.rows());
  for (std::size_t r = 0; r < y.rows(); ++r) out[r] = y.at(r, 0);
  return out;
}

// ------------------------------------------------------------------ 1

Outcome ig_completeness() {
  datasets::AlcoholConfig cfg;
  cfg.positives = 88;
  cfg.negatives = 1851;
  cfg.acids = 61;
  cfg.seed = 101;
  const datasets::LabeledSet set = datasets::generate_alcohol_set(cfg);
  const fingerprint::FingerprintConfig fp;
  std::vector<std::size_t> all(set.size());
  std::iota(all.begin(), all.end(), 0);
  const nn::DenseData data{fingerprints(set.molecules, all, fp), set.labels};

  Rng pick(5);
  std::vector<std::size_t> molecules;
  for (int i = 0; i < 10; ++i) molecules.push_back(pick.below(cfg.positives));
  for (int i = 0; i < 10; ++i) molecules.push_back(cfg.positives + pick.below(cfg.negatives + cfg.acids));

  const int models = 50;
  std::vector<double> right(models * molecules.size()), trap(right.size());
  attribution::IgOptions trapezoid;
  trapezoid.trapezoid = true;
  parallel_for(models, [&](std::size_t k) {
    nn::TrainConfig tc;
    tc.seed = 1000 + k;
    tc.epochs = 3;
    const nn::DenseSpec spec{fp.n_bits, {64, 32}, 1};
    const nn::DenseNet net = nn::train_dense(data, nullptr, spec, tc).net;
    for (std::size_t j = 0; j < molecules.size(); ++j) {
      const chem::MolecularGraph& g = set.molecules[molecules[j]];
      right[k * molecules.size() + j] = attribution::attribute_molecule(net, g, fp, 1000, 0).completeness_gap;
      trap[k * molecules.size() + j] = attribution::attribute_molecule(net, g, fp, 1000, 0, trapezoid).completeness_gap;
    }
  });
  const double worst = *std::max_element(right.begin(), right.end());
  const double worst_trap = *std::max_element(trap.begin(), trap.end());
  const auto over = std::count_if(right.begin(), right.end(), [](double g) { return g > 1e-3; });
  return {over == 0, format("max |sum a - (F(x)-F(0))| = %.4g right-endpoint, %zu of %zu pairs above 1e-3 "
                            "(trapezoid max %.3g); 50 models x 20 molecules, m=1000",
                            worst, static_cast<std::size_t>(over), right.size(), worst_trap)};
}

// ------------------------------------------------------------------ 2

Outcome ig_linear() {
  Rng rng(2);
  // Error in units of eps * |w_i (x_i - x'_i)|.
  auto worst_error = [](const nn::DenseNet& net, const std::vector<double>& x, const std::vector<double>& base,
                        int steps) {
    const auto a = attribution::integrated_gradients(net, x, base, steps, 0);
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double expected = net.layers()[0].weight(0, i) * (x[i] - base[i]);
      const double unit = std::numeric_limits<double>::epsilon() * std::max(std::abs(expected), 1e-300);
      worst = std::max(worst, std::abs(a[i] - expected) / unit);
    }
    return worst;
  };
  double single = 0.0, many = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t in = 1 + rng.below(64);
    nn::DenseNet net(nn::DenseSpec{in, {}, 1, nn::Activation::Selu, nn::Activation::Identity});
    for (double& w : net.layers()[0].weight.flat()) w = rng.normal();
    net.layers()[0].bias[0] = rng.normal();
    std::vector<double> x(in), zero(in, 0.0), base(in);
    for (double& v : x) v = rng.normal();
    for (double& v : base) v = rng.normal();
    single = std::max({single, worst_error(net, x, zero, 1), worst_error(net, x, base, 1)});
    for (int steps : {2, 7, 1000}) many = std::max(many, worst_error(net, x, base, steps));
  }
  return {single <= 1.0, format("m=1: max error %.2f eps relative to w_i (x_i - x'_i) over 200 linear models; "
                                "m in {2, 7, 1000}: %.2f eps",
                                single, many)};
}

// ------------------------------------------------------------------ 3

// Extended-precision reference forward passes used only for the numeric
// side of the gradient checks. Parameters are held as blocks in the order
// of parameters() so a probe can shift one entry.
using Real = long double;
using Blocks = std::vector<std::vector<Real>>;

Blocks widen(std::vector<std::span<double>> spans) {
  Blocks out;
  for (auto s : spans) out.emplace_back(s.begin(), s.end());
  return out;
}

Real reference_activate(nn::Activation a, Real x) {
  switch (a) {
    case nn::Activation::Selu:
      return x > 0 ? Real(nn::kSeluLambda) * x : Real(nn::kSeluLambda) * Real(nn::kSeluAlpha) * std::expm1(x);
    case nn::Activation::Relu:
      return x > 0 ? x : Real(0);
    case nn::Activation::Identity:
      return x;
    case nn::Activation::Sigmoid:
      return 1 / (1 + std::exp(-x));
  }
  return x;
}

bool has_kink(nn::Activation a) { return a == nn::Activation::Selu || a == nn::Activation::Relu; }

struct Evaluation {
  Real value;
  std::vector<std::size_t> pattern;  // which piece of every piecewise operation
};

// Dense layers stored from block `first` on; returns output-layer
// pre-activations for each row.
std::vector<std::vector<Real>> reference_dense(const Blocks& p, std::size_t first, const nn::DenseSpec& spec,
                                               std::vector<std::vector<Real>> rows,
                                               std::vector<std::size_t>& pattern) {
  const std::size_t layers = spec.hidden.size() + 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const auto& w = p[first + 2 * l];
    const auto& b = p[first + 2 * l + 1];
    const std::size_t out = b.size();
    for (auto& row : rows) {
      std::vector<Real> next(out);
      for (std::size_t o = 0; o < out; ++o) {
        Real z = b[o];
        for (std::size_t i = 0; i < row.size(); ++i) z += w[o * row.size() + i] * row[i];
        next[o] = z;
      }
      if (l + 1 < layers) {
        for (Real& z : next) {
          if (has_kink(spec.hidden_activation)) pattern.push_back(z > 0);
          z = reference_activate(spec.hidden_activation, z);
        }
      }
      row = std::move(next);
    }
  }
  return rows;
}

Real reference_bce(const std::vector<std::vector<Real>>& logits, const LabelMatrix& y) {
  Real total = 0;
  for (std::size_t t = 0; t < y.tasks(); ++t) {
    std::size_t count = 0;
    Real task = 0;
    for (std::size_t r = 0; r < logits.size(); ++r) {
      if (y.missing(r, t)) continue;
      const Real z = logits[r][t];
      task += (z > 0 ? z : Real(0)) - z * y.at(r, t) + std::log1p(std::exp(-std::abs(z)));
      ++count;
    }
    if (count) total += task / count;
  }
  return total;
}

std::vector<std::vector<Real>> widen_rows(const Matrix& m) {
  std::vector<std::vector<Real>> out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) out[r].assign(m.row(r).begin(), m.row(r).end());
  return out;
}

struct ReferenceGraph {
  std::vector<std::vector<int>> neighbors;
  std::vector<std::size_t> atom_offset;
};

Real reference_gcn_loss(const Blocks& p, const gcn::GcnSpec& spec, const ReferenceGraph& g,
                        const std::vector<std::vector<Real>>& features, const LabelMatrix& y,
                        std::vector<std::size_t>& pattern) {
  const std::size_t atoms = features.size();
  std::vector<std::vector<std::vector<Real>>> reps{features};
  for (std::size_t l = 0; l < spec.conv_widths.size(); ++l) {
    const auto& w = p[2 * l];
    const auto& b = p[2 * l + 1];
    const auto& h = reps.back();
    const std::size_t d = h[0].size(), out = b.size();
    std::vector<std::vector<Real>> next(atoms, std::vector<Real>(out));
    for (std::size_t v = 0; v < atoms; ++v) {
      std::vector<int> partners = g.neighbors[v];
      if (partners.empty()) partners.push_back(-1);
      std::vector<std::vector<Real>> acts;
      for (int u : partners) {
        std::vector<Real> pair(h[v]);
        if (u >= 0) {
          pair.insert(pair.end(), h[static_cast<std::size_t>(u)].begin(), h[static_cast<std::size_t>(u)].end());
        } else {
          pair.resize(2 * d, 0);
        }
        std::vector<Real> a(out);
        for (std::size_t o = 0; o < out; ++o) {
          Real z = b[o];
          for (std::size_t i = 0; i < 2 * d; ++i) z += w[o * 2 * d + i] * pair[i];
          pattern.push_back(z > 0);
          a[o] = z > 0 ? z : Real(0);
        }
        acts.push_back(std::move(a));
      }
      for (std::size_t o = 0; o < out; ++o) {
        if (spec.pooling == gcn::Pooling::Max) {
          std::size_t best = 0;
          for (std::size_t k = 1; k < acts.size(); ++k) {
            if (acts[k][o] > acts[best][o]) best = k;
          }
          pattern.push_back(best);
          next[v][o] = acts[best][o];
        } else {
          Real s = 0;
          for (const auto& a : acts) s += a[o];
          next[v][o] = spec.pooling == gcn::Pooling::Mean ? s / acts.size() : s;
        }
      }
    }
    reps.push_back(std::move(next));
  }
  const std::size_t molecules = g.atom_offset.size() - 1;
  std::vector<std::vector<Real>> pooled(molecules);
  for (std::size_t l = spec.skip_connections ? 0 : reps.size() - 1; l < reps.size(); ++l) {
    const auto& h = reps[l];
    for (std::size_t m = 0; m < molecules; ++m) {
      const std::size_t begin = g.atom_offset[m], end = g.atom_offset[m + 1];
      for (std::size_t c = 0; c < h[begin].size(); ++c) {
        Real value = h[begin][c];
        if (spec.pooling == gcn::Pooling::Max) {
          std::size_t best = begin;
          for (std::size_t v = begin + 1; v < end; ++v) {
            if (h[v][c] > value) {
              value = h[v][c];
              best = v;
            }
          }
          pattern.push_back(best);
        } else {
          for (std::size_t v = begin + 1; v < end; ++v) value += h[v][c];
          if (spec.pooling == gcn::Pooling::Mean) value /= (end - begin);
        }
        pooled[m].push_back(value);
      }
    }
  }
  const nn::DenseSpec head{pooled[0].size(), spec.head_hidden, spec.n_tasks, spec.head_activation};
  return reference_bce(reference_dense(p, 2 * spec.conv_widths.size(), head, pooled, pattern), y);
}

struct GradientCheck {
  double worst = 0.0;
  std::size_t probes = 0;
  std::size_t kinks = 0;  // no step kept every stencil point on one piece

  void merge(const GradientCheck& o) {
    worst = std::max(worst, o.worst);
    probes += o.probes;
    kinks += o.kinks;
  }
};

// Richardson-extrapolated central difference of eval(t).value at t = 0,
// using the largest step whose stencil stays on the piece containing 0.
template <class Eval>
void probe(GradientCheck& check, double analytic, Eval eval) {
  ++check.probes;
  const std::vector<std::size_t> base = eval(0).pattern;
  for (Real h : {1e-3L, 1e-4L, 1e-5L, 1e-6L}) {
    const Real offsets[6] = {-2 * h, -h, -h / 2, h / 2, h, 2 * h};
    Real f[6];
    bool same = true;
    for (int k = 0; k < 6 && same; ++k) {
      const Evaluation e = eval(offsets[k]);
      f[k] = e.value;
      same = e.pattern == base;
    }
    if (!same) continue;
    const Real coarse = (f[0] - 8 * f[1] + 8 * f[4] - f[5]) / (12 * h);
    const Real fine = (f[1] - 8 * f[2] + 8 * f[3] - f[4]) / (6 * h);
    check.worst = std::max(check.worst, oracle::relative_error(analytic, static_cast<double>((16 * fine - coarse) / 15)));
    return;
  }
  ++check.kinks;
}

GradientCheck dense_gradient_check(Rng& rng) {
  static constexpr nn::Activation kActs[] = {nn::Activation::Selu, nn::Activation::Relu, nn::Activation::Identity,
                                             nn::Activation::Sigmoid};
  const std::size_t in = 1 + rng.below(8);
  std::vector<std::size_t> hidden;
  for (std::size_t l = 0, n = rng.below(4); l < n; ++l) hidden.push_back(1 + rng.below(6));
  const std::size_t tasks = 1 + rng.below(3);
  const nn::DenseSpec spec{in, hidden, tasks, kActs[rng.below(4)]};
  nn::DenseNet net = nn::DenseNet::initialized(spec, rng.next());
  for (auto& layer : net.layers()) {
    for (double& b : layer.bias) b = 0.3 * rng.normal();
  }
  const std::size_t batch = 1 + rng.below(5);
  Matrix x(batch, in);
  for (double& v : x.flat()) v = rng.normal();
  LabelMatrix y(batch, tasks);
  for (std::size_t r = 0; r < batch; ++r) {
    for (std::size_t t = 0; t < tasks; ++t) {
      y.set(r, t, rng.bernoulli(0.2) ? LabelMatrix::kMissing : static_cast<std::int8_t>(rng.bernoulli(0.5)));
    }
  }
  std::vector<std::size_t> rows(batch);
  std::iota(rows.begin(), rows.end(), 0);
  nn::DenseCache cache;
  net.forward_batch(x, cache);
  Matrix dlogits;
  nn::masked_bce(cache.pre.back(), y, rows, &dlogits);
  nn::DenseGradients grads = net.make_gradients();
  Matrix dinput;
  net.backward_batch(cache, dlogits, &grads, &dinput);

  Blocks params = widen(net.parameters());
  auto input = widen_rows(x);
  auto evaluate = [&] {
    Evaluation e{0, {}};
    e.value = reference_bce(reference_dense(params, 0, spec, input, e.pattern), y);
    return e;
  };
  GradientCheck check;
  auto shifted = [&](Real& slot, double analytic) {
    const Real keep = slot;
    probe(check, analytic, [&](Real t) {
      slot = keep + t;
      Evaluation e = evaluate();
      slot = keep;
      return e;
    });
  };
  auto gs = grads.spans();
  for (std::size_t b = 0; b < params.size(); ++b) {
    for (std::size_t i = 0; i < params[b].size(); ++i) shifted(params[b][i], gs[b][i]);
  }
  for (std::size_t r = 0; r < batch; ++r) {
    for (std::size_t i = 0; i < in; ++i) shifted(input[r][i], dinput(r, i));
  }
  // dF/dx of the task probability as used by attribution.
  const std::size_t task = rng.below(tasks);
  const std::vector<double> x0(x.row(0).begin(), x.row(0).end());
  const auto g = net.grad_input(x0, task);
  std::vector<std::vector<Real>> point{input[0]};
  for (std::size_t i = 0; i < in; ++i) {
    const Real keep = point[0][i];
    probe(check, g[i], [&](Real t) {
      point[0][i] = keep + t;
      Evaluation e{0, {}};
      e.value = reference_activate(nn::Activation::Sigmoid, reference_dense(params, 0, spec, point, e.pattern)[0][task]);
      point[0][i] = keep;
      return e;
    });
  }
  return check;
}

GradientCheck conv_gradient_check(Rng& rng, const std::vector<chem::MolecularGraph>& graphs) {
  gcn::GcnSpec spec;
  spec.input_dim = gcn::AtomFeaturizer().dim();
  for (std::size_t l = 0, n = 1 + rng.below(3); l < n; ++l) spec.conv_widths.push_back(2 + rng.below(5));
  spec.pooling = static_cast<gcn::Pooling>(rng.below(3));
  spec.skip_connections = rng.bernoulli(0.5);
  for (std::size_t l = 0, n = rng.below(3); l < n; ++l) spec.head_hidden.push_back(2 + rng.below(4));
  spec.n_tasks = 1 + rng.below(2);
  gcn::GraphConvNet net = gcn::GraphConvNet::initialized(spec, rng.next());
  for (auto& l : net.conv_layers()) {
    for (double& b : l.bias) b = 0.1 * rng.normal();
  }
  for (auto& l : net.head().layers()) {
    for (double& b : l.bias) b = 0.1 * rng.normal();
  }
  std::vector<const chem::MolecularGraph*> ptrs;
  for (std::size_t i = 0, n = 1 + rng.below(3); i < n; ++i) ptrs.push_back(&graphs[rng.below(graphs.size())]);
  gcn::GraphBatch batch = gcn::GraphBatch::from_graphs(ptrs, net.featurizer());
  for (double& v : batch.features.flat()) v += 0.3 * rng.normal();
  LabelMatrix y(ptrs.size(), spec.n_tasks);
  for (std::size_t r = 0; r < ptrs.size(); ++r) {
    for (std::size_t t = 0; t < spec.n_tasks; ++t) y.set(r, t, static_cast<std::int8_t>(rng.bernoulli(0.5)));
  }
  std::vector<std::size_t> rows(ptrs.size());
  std::iota(rows.begin(), rows.end(), 0);
  gcn::GcnCache cache;
  net.forward_batch(batch, cache);
  Matrix dl;
  nn::masked_bce(cache.head.pre.back(), y, rows, &dl);
  gcn::GcnGradients grads = net.make_gradients();
  Matrix dfeat;
  net.backward_batch(batch, cache, dl, &grads, &dfeat);

  // The reference rebuilds adjacency from the molecules themselves.
  ReferenceGraph ref;
  ref.atom_offset.push_back(0);
  for (const auto* g : ptrs) {
    const int base = static_cast<int>(ref.atom_offset.back());
    for (int v = 0; v < static_cast<int>(g->atom_count()); ++v) {
      std::vector<int> nb;
      for (const chem::Neighbor& n : g->neighbors(v)) nb.push_back(base + n.atom);
      ref.neighbors.push_back(nb);
    }
    ref.atom_offset.push_back(ref.atom_offset.back() + g->atom_count());
  }
  Blocks params = widen(net.parameters());
  auto features = widen_rows(batch.features);
  GradientCheck check;
  auto shifted = [&](Real& slot, double analytic) {
    const Real keep = slot;
    probe(check, analytic, [&](Real t) {
      slot = keep + t;
      Evaluation e{0, {}};
      e.value = reference_gcn_loss(params, spec, ref, features, y, e.pattern);
      slot = keep;
      return e;
    });
  };
  auto gs = grads.spans();
  for (std::size_t b = 0; b < params.size(); ++b) {
    for (std::size_t i = 0; i < params[b].size(); ++i) shifted(params[b][i], gs[b][i]);
  }
  for (std::size_t r = 0; r < features.size(); ++r) {
    for (std::size_t c = 0; c < features[r].size(); ++c) shifted(features[r][c], dfeat(r, c));
  }
  return check;
}

Outcome gradient_oracles() {
  Rng rng(3);
  GradientCheck dense, conv;
  for (int i = 0; i < 100; ++i) dense.merge(dense_gradient_check(rng));
  const auto graphs = testutil::random_molecules(60, 33, 10);
  for (int i = 0; i < 100; ++i) conv.merge(conv_gradient_check(rng, graphs));
  const std::size_t probes = dense.probes + conv.probes, kinks = dense.kinks + conv.kinks;
  return {dense.worst <= 1e-6 && conv.worst <= 1e-6 && kinks * 1000 <= probes,
          format("max relative error dense %.3g (%zu probes), conv %.3g (%zu probes); %zu probes within 2e-6 of a "
                 "kink; 100 configurations each",
                 dense.worst, dense.probes, conv.worst, conv.probes, kinks)};
}

// ------------------------------------------------------------------ 4

// Atoms that make the alcohol rule fire: each hydroxy O on a saturated C
// and that C.
std::set<int> alcohol_atoms(const chem::MolecularGraph& g) {
  static const chem::Pattern p = chem::parse_pattern(datasets::kAlcoholSmarts);
  std::set<int> out;
  for (const auto& m : chem::match_pattern(p, g)) out.insert(m.begin(), m.end());
  return out;
}

Outcome alcohol_task() {
  datasets::AlcoholConfig cfg;
  cfg.seed = 4;
  datasets::LabeledSet set = datasets::generate_alcohol_set(cfg);
  set.split = datasets::split(set, {0.8, 0.1, 0.1}, 4, true);
  const fingerprint::FingerprintConfig fp;
  auto data_of = [&](datasets::SplitTag tag) {
    const auto rows = rows_with(set.split, tag);
    return std::pair{rows, nn::DenseData{fingerprints(set.molecules, rows, fp), set.labels.select(rows)}};
  };
  const auto [train_rows, train] = data_of(datasets::SplitTag::Train);
  const auto [valid_rows, valid] = data_of(datasets::SplitTag::Valid);
  const auto [test_rows, test] = data_of(datasets::SplitTag::Test);
  nn::TrainConfig tc;
  tc.seed = 4;
  const nn::DenseNet net =
      nn::train_dense(train, &valid, nn::dense_preset("tox21-small", fp.n_bits, 1), tc).net;
  const Matrix scores = nn::predict(net, test.x);
  const std::vector<int> labels = task_labels(test.y);
  const double auc = nn::auc({scores.data(), scores.rows()}, labels);

  std::vector<std::size_t> correct;
  for (std::size_t i = 0; i < test_rows.size(); ++i) {
    if (labels[i] == 1 && scores(i, 0) > 0.5) correct.push_back(test_rows[i]);
  }
  std::vector<char> hit(correct.size(), 0);
  parallel_for(correct.size(), [&](std::size_t k) {
    const chem::MolecularGraph& g = set.molecules[correct[k]];
    const auto r = attribution::attribute_molecule(net, g, fp, 1000, 0);
    const int top = static_cast<int>(std::max_element(r.per_atom.begin(), r.per_atom.end()) - r.per_atom.begin());
    hit[k] = alcohol_atoms(g).count(top) > 0;
  });
  const double fraction =
      correct.empty() ? 0.0 : static_cast<double>(std::count(hit.begin(), hit.end(), 1)) / correct.size();
  return {auc >= 0.95 && fraction >= 0.90 && !correct.empty(),
          format("test AUC %.4f; %zu of %zu correctly classified positives peak on the alcohol O or C (%.1f%%); "
                 "tox21-small, 5000 molecules",
                 auc, static_cast<std::size_t>(std::count(hit.begin(), hit.end(), 1)), correct.size(),
                 100.0 * fraction)};
}

// ------------------------------------------------------------------ 5

Outcome permutation_invariance() {
  const auto graphs = testutil::random_molecules(200, 55, 16);
  Rng rng(5);
  double worst = 0.0;
  for (gcn::Pooling pooling : {gcn::Pooling::Max, gcn::Pooling::Sum, gcn::Pooling::Mean}) {
    gcn::GcnSpec spec = gcn::gcn_preset("ames-gcn-3x128-fc512", 1);
    spec.pooling = pooling;
    spec.skip_connections = pooling == gcn::Pooling::Sum;
    const gcn::GraphConvNet net = gcn::GraphConvNet::initialized(spec, 50 + static_cast<int>(pooling));
    std::vector<std::vector<chem::MolecularGraph>> permuted(5);
    for (auto& batch : permuted) {
      for (const auto& g : graphs) batch.push_back(chem::permute_atoms(g, testutil::random_permutation(g.atom_count(), rng)));
    }
    const Matrix base = gcn::predict(net, graphs);
    for (const auto& batch : permuted) {
      const Matrix p = gcn::predict(net, batch);
      for (std::size_t i = 0; i < p.size(); ++i) worst = std::max(worst, std::abs(p.data()[i] - base.data()[i]));
    }
  }
  return {worst <= 1e-10, format("max |difference| %.3g over 200 molecules x 5 permutations x 3 poolings", worst)};
}

// ------------------------------------------------------------------ 6

Outcome receptive_field() {
  const auto graphs = testutil::random_molecules(300, 66, 16);
  Rng rng(6);
  int cases = 0, identical = 0;
  static constexpr int kOtherElements[] = {6, 7, 8, 16, 9, 17, 35, 53, 15, 5};
  for (std::size_t attempt = 0; cases < 100 && attempt < 10000; ++attempt) {
    const chem::MolecularGraph& g = graphs[rng.below(graphs.size())];
    gcn::GcnSpec spec;
    spec.input_dim = gcn::AtomFeaturizer().dim();
    const int layers = 1 + static_cast<int>(rng.below(3));
    spec.conv_widths.assign(static_cast<std::size_t>(layers), 8);
    spec.pooling = static_cast<gcn::Pooling>(rng.below(3));
    spec.skip_connections = rng.bernoulli(0.5);
    spec.head_hidden = {8};
    const gcn::GraphConvNet net = gcn::GraphConvNet::initialized(spec, rng.next());
    const int center = static_cast<int>(rng.below(g.atom_count()));
    const auto inside = chem::atoms_within(g, center, layers);
    std::vector<int> outside;
    for (int v = 0; v < static_cast<int>(g.atom_count()); ++v) {
      if (!std::binary_search(inside.begin(), inside.end(), v)) outside.push_back(v);
    }
    if (outside.empty()) continue;
    ++cases;
    bool same = true;
    if (cases % 2) {
      // Arbitrary input-feature noise outside the field.
      const Matrix x = net.featurizer().featurize(g);
      Matrix y = x;
      for (int v : outside) {
        for (std::size_t c = 0; c < y.cols(); ++c) y(static_cast<std::size_t>(v), c) += 3.0 * rng.normal();
      }
      const Matrix hx = net.atom_head_inputs(g, x);
      const Matrix hy = net.atom_head_inputs(g, y);
      const auto sx = net.head().forward(hx.row(static_cast<std::size_t>(center))).outputs;
      const auto sy = net.head().forward(hy.row(static_cast<std::size_t>(center))).outputs;
      same = sx == sy;
    } else {
      // Element changes outside the field, scored through the public API.
      chem::MolecularGraph h = g;
      for (int v : outside) h.atom(v).element = kOtherElements[rng.below(10)];
      const auto a = gcn::score_substructures(net, g, 0);
      const auto b = gcn::score_substructures(net, h, 0);
      same = a[static_cast<std::size_t>(center)].score == b[static_cast<std::size_t>(center)].score &&
             a[static_cast<std::size_t>(center)].atoms == inside;
    }
    identical += same ? 1 : 0;
  }
  return {cases == 100 && identical == cases,
          format("%d of %d perturbations outside radius L left the centre score bit-identical", identical, cases)};
}

// ------------------------------------------------------------------ 7

Outcome planted_recovery() {
  datasets::PlantedConfig cfg;
  cfg.seed = 7;
  datasets::LabeledSet set = datasets::generate_planted_set(cfg);
  set.split = datasets::split(set, {0.8, 0.1, 0.1}, 7, true);
  const datasets::LabeledSet train = set.subset(datasets::SplitTag::Train);
  const datasets::LabeledSet valid = set.subset(datasets::SplitTag::Valid);
  const datasets::LabeledSet test = set.subset(datasets::SplitTag::Test);
  const gcn::GraphData train_data{train.molecules, train.labels};
  const gcn::GraphData valid_data{valid.molecules, valid.labels};
  const gcn::GraphData test_data{test.molecules, test.labels};
  nn::TrainConfig tc;
  tc.seed = 7;
  tc.epochs = 15;
  const gcn::GraphConvNet net =
      gcn::train_gcn(train_data, &valid_data, gcn::gcn_preset("ames-gcn-3x128-fc512", 1), tc).net;
  const Matrix scores = gcn::predict(net, test.molecules);
  const double auc = nn::auc({scores.data(), scores.rows()}, task_labels(test.labels));

  const auto fragments = gcn::extract_top_substructures(net, valid.molecules, test_data, 0, 10);
  std::vector<chem::Pattern> planted;
  for (const std::string& p : cfg.patterns) planted.push_back(chem::parse_pattern(p));
  std::size_t containing = 0;
  for (const auto& f : fragments) {
    const bool any = std::any_of(planted.begin(), planted.end(),
                                 [&](const chem::Pattern& p) { return chem::has_match(p, f.fragment); });
    containing += any ? 1 : 0;
  }
  const double fraction = fragments.empty() ? 0.0 : static_cast<double>(containing) / fragments.size();
  return {auc >= 0.85 && fraction >= 0.8 && fragments.size() == 10,
          format("test AUC %.4f; %zu of %zu top fragments contain a planted pattern; ames-gcn-3x128-fc512", auc,
                 containing, fragments.size())};
}

// ------------------------------------------------------------------ 8

// Null distribution of U for sample sizes (n1, n - n1), by enumerating
// every choice of which pooled positions belong to the first sample.
std::vector<std::size_t> u_histogram(std::size_t n1, std::size_t n) {
  std::vector<std::size_t> hist(n1 * (n - n1) + 1, 0);
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != n1) continue;
    std::size_t u = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(mask >> i & 1u)) continue;
      for (std::size_t j = 0; j < i; ++j) u += (mask >> j & 1u) ? 0 : 1;
    }
    ++hist[u];
  }
  return hist;
}

Outcome mann_whitney() {
  // Every tie-free arrangement of n1 + n2 <= 12 observations.
  std::size_t inputs = 0, u_mismatch = 0;
  double worst_p = 0.0;
  Rng rng(8);
  for (std::size_t n = 2; n <= unitscreen::kExactLimit; ++n) {
    std::vector<std::vector<std::size_t>> hist(n);
    for (std::size_t n1 = 1; n1 < n; ++n1) hist[n1] = u_histogram(n1, n);
    std::vector<double> values(n);
    double v = rng.normal();
    for (double& x : values) x = (v += 0.1 + rng.uniform());
    for (std::uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
      std::vector<double> a, b;
      for (std::size_t i = 0; i < n; ++i) ((mask >> i) & 1u ? a : b).push_back(values[i]);
      rng.shuffle(a);
      rng.shuffle(b);
      double u = 0.0;
      for (double x : a) {
        for (double y : b) u += x > y ? 1.0 : 0.0;
      }
      const auto& h = hist[a.size()];
      std::size_t lower = 0, upper = 0, total = 0;
      for (std::size_t k = 0; k < h.size(); ++k) {
        total += h[k];
        lower += static_cast<double>(k) <= u ? h[k] : 0;
        upper += static_cast<double>(k) >= u ? h[k] : 0;
      }
      const double p = std::min(1.0, 2.0 * static_cast<double>(std::min(lower, upper)) / static_cast<double>(total));
      const unitscreen::MannWhitneyResult got = unitscreen::mann_whitney_u(a, b);
      ++inputs;
      if (got.u != u || !got.exact) ++u_mismatch;
      worst_p = std::max(worst_p, std::abs(got.p - p));
    }
  }

  // Planted unit: activation tracks one pattern's presence plus noise.
  int recovered = 0;
  double worst_adjusted = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng r(seed);
    const std::size_t n = 200, patterns = 30;
    unitscreen::PresenceCalls calls;
    calls.molecules = n;
    for (std::size_t j = 0; j < patterns; ++j) {
      calls.ids.push_back("pattern" + std::to_string(j));
      calls.sizes.push_back(1 + j % 5);
      std::vector<char> row(n);
      for (auto& c : row) c = r.bernoulli(0.25);
      calls.present.push_back(row);
    }
    std::vector<Matrix> acts{Matrix(n, 64), Matrix(n, 64)};
    for (Matrix& m : acts) {
      for (double& x : m.flat()) x = r.normal();
    }
    const std::size_t unit = r.below(64), target = r.below(patterns);
    for (std::size_t m = 0; m < n; ++m) acts[1](m, unit) = calls.present[target][m] + 0.3 * r.normal();
    const auto report = unitscreen::screen_activations(acts, calls, 0.05);
    const auto it = std::find_if(report.associations.begin(), report.associations.end(), [&](const auto& a) {
      return a.layer == 2 && a.unit == unit && a.pattern == calls.ids[target];
    });
    if (it != report.associations.end()) {
      ++recovered;
      worst_adjusted = std::max(worst_adjusted, it->p_adjusted);
    }
  }
  const bool ok = u_mismatch == 0 && worst_p <= 1e-12 && recovered == 20;
  return {ok, format("%zu tie-free inputs: %zu U mismatches, max |p - exact| %.3g; planted unit recovered in %d/20 "
                     "seeds (max adjusted p %.3g)",
                     inputs, u_mismatch, worst_p, recovered, worst_adjusted)};
}

// ------------------------------------------------------------------ 9

Outcome fingerprint_invariance() {
  const auto graphs = testutil::random_molecules(1000, 99, 16);
  std::size_t mismatches = 0;
  for (const fingerprint::FingerprintConfig cfg : {fingerprint::FingerprintConfig{1, 1024},
                                                   fingerprint::FingerprintConfig{2, 2048}}) {
    std::vector<std::size_t> bad(graphs.size(), 0);
    parallel_for(graphs.size(), [&](std::size_t i) {
      Rng local = Rng::stream(static_cast<std::uint64_t>(cfg.radius), i);
      const fingerprint::Fingerprint ref = fingerprint::ecfp(graphs[i], cfg);
      for (int k = 0; k < 5; ++k) {
        const auto perm = testutil::random_permutation(graphs[i].atom_count(), local);
        if (!(fingerprint::ecfp(chem::permute_atoms(graphs[i], perm), cfg) == ref)) ++bad[i];
      }
    });
    mismatches += std::accumulate(bad.begin(), bad.end(), std::size_t{0});
  }

  std::ifstream in(std::string(MOLEXPLAIN_TEST_DATA) + "/golden_fingerprints.tsv");
  std::size_t rows = 0, golden_bad = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::string smiles;
    std::getline(row, smiles, '\t');
    std::vector<std::size_t> expected;
    std::size_t b;
    while (row >> b) expected.push_back(b);
    ++rows;
    if (fingerprint::ecfp(chem::parse_smiles(smiles), {1, 1024}).on_bits() != expected) ++golden_bad;
  }
  return {mismatches == 0 && rows > 0 && golden_bad == 0,
          format("%zu permutation mismatches over 1000 molecules x 5 permutations x 2 configs; golden file %zu/%zu "
                 "rows identical",
                 mismatches, rows - golden_bad, rows)};
}

// ----------------------------------------------------------------- 10

Outcome subgraph_oracle() {
  Rng rng(10);
  const auto graphs = testutil::random_molecules(500, 1010, 8);
  std::size_t disagreements = 0, matched_pairs = 0;
  for (std::size_t i = 0; i < 500; ++i) {
    const chem::MolecularGraph& g = graphs[i];
    const chem::Pattern p = oracle::random_pattern(rng, 4);
    const auto unique = chem::match_pattern(p, g);
    std::set<std::vector<int>> got;
    for (auto m : unique) {
      std::sort(m.begin(), m.end());
      got.insert(m);
    }
    const auto expected = oracle::brute_force_matches(p, g);
    const std::size_t all = chem::match_pattern(p, g, chem::MatchMode::AllMappings).size();
    if (got != expected || got.size() != unique.size() || all != oracle::brute_force_mapping_count(p, g) ||
        chem::has_match(p, g) != !expected.empty()) {
      ++disagreements;
    }
    matched_pairs += expected.empty() ? 0 : 1;
  }
  return {disagreements == 0,
          format("%zu disagreements over 500 pairs (graphs <= 8 atoms, patterns <= 4 nodes; %zu pairs match)",
                 disagreements, matched_pairs)};
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  // Usage: molexplain_acceptance [--known-red ID,...] [ID...]
  // Ids select a subset. Known-red criteria still print FAIL but do not set
  // the exit status.
  std::set<int> only, known_red;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--known-red" && i + 1 < argc) {
      std::istringstream ids(argv[++i]);
      for (std::string id; std::getline(ids, id, ',');) known_red.insert(std::atoi(id.c_str()));
    } else {
      only.insert(std::atoi(arg.c_str()));
    }
  }
  set_max_threads(0);
  std::printf("kernel backend: %s, threads: %zu\n",
              std::string(kernels::backend_name(kernels::active().backend)).c_str(), max_threads());
  const std::vector<Criterion> criteria = {
      {1, "IG completeness", 60, ig_completeness},
      {2, "IG linear exactness", 10, ig_linear},
      {3, "gradient oracles", 60, gradient_oracles},
      {4, "alcohol toy task", 600, alcohol_task},
      {5, "GCN permutation invariance", 60, permutation_invariance},
      {6, "receptive-field exactness", 60, receptive_field},
      {7, "planted-toxicophore recovery", 900, planted_recovery},
      {8, "Mann-Whitney correctness", 120, mann_whitney},
      {9, "fingerprint determinism and invariance", 60, fingerprint_invariance},
      {10, "subgraph-match oracle", 120, subgraph_oracle},
  };
  int failed = 0, ran = 0, unexpected = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    ++ran;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = seconds <= c.budget_seconds;
    const bool pass = o.ok && in_time;
    failed += pass ? 0 : 1;
    const bool known = known_red.count(c.id) > 0;
    unexpected += pass || known ? 0 : 1;
    std::printf("criterion %d [%s]: %s  %s; %.1f s (budget %.0f s%s)%s\n", c.id, c.name, pass ? "PASS" : "FAIL",
                o.detail.c_str(), seconds, c.budget_seconds, in_time ? "" : ", exceeded",
                known ? (pass ? " [listed as known red, now passing]" : " [known red]") : "");
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria passed", ran - failed, ran);
  if (!known_red.empty()) std::printf("; %d failure(s) outside the known-red list", unexpected);
  std::printf("\n");
  return unexpected == 0 ? 0 : 1;
}
