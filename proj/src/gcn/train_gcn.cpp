#include <algorithm>
#include <cmath>
#include <numeric>

#include "molexplain/gcn.hpp"
#include "molexplain/optim.hpp"
#include "molexplain/parallel.hpp"
#include "molexplain/rng.hpp"

namespace molexplain::gcn {

namespace {

constexpr std::size_t kPredictChunk = 64;

GraphBatch batch_of(const std::vector<chem::MolecularGraph>& graphs, std::span<const std::size_t> rows,
                    const AtomFeaturizer& f) {
  std::vector<const chem::MolecularGraph*> ptrs;
  ptrs.reserve(rows.size());
  for (std::size_t r : rows) ptrs.push_back(&graphs[r]);
  return GraphBatch::from_graphs(ptrs, f);
}

std::optional<double> mean_of(const std::vector<std::optional<double>>& v) {
  double s = 0.0;
  int n = 0;
  for (const auto& x : v) {
    if (x) {
      s += *x;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return s / n;
}

}  // namespace

Matrix predict(const GraphConvNet& net, const std::vector<chem::MolecularGraph>& graphs) {
  Matrix out(graphs.size(), net.spec().n_tasks);
  std::vector<std::size_t> rows(graphs.size());
  std::iota(rows.begin(), rows.end(), 0);
  const std::size_t chunks = (graphs.size() + kPredictChunk - 1) / kPredictChunk;
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t start = c * kPredictChunk;
    const std::size_t len = std::min(kPredictChunk, graphs.size() - start);
    const GraphBatch batch = batch_of(graphs, {rows.data() + start, len}, net.featurizer());
    GcnCache cache;
    net.forward_batch(batch, cache);
    std::copy_n(cache.head.outputs.data(), cache.head.outputs.size(), out.row(start).data());
  });
  return out;
}

GcnTrainResult train_gcn(const GraphData& train, const GraphData* valid, const GcnSpec& spec,
                         const nn::TrainConfig& cfg) {
  cfg.validate();
  const std::size_t n = train.graphs.size();
  if (n == 0) throw UserError("training set is empty");
  if (train.y.rows() != n || train.y.tasks() != spec.n_tasks) throw UserError("label matrix does not match data");

  GcnTrainResult result;
  nn::TrainReport& report = result.report;
  for (std::size_t t = 0; t < spec.n_tasks; ++t) {
    bool any = false;
    for (std::size_t r = 0; r < n && !any; ++r) any = !train.y.missing(r, t);
    if (!any) report.skipped_tasks.push_back(t);
  }

  GraphConvNet net = GraphConvNet::initialized(spec, *cfg.seed);
  Rng order_rng(*cfg.seed ^ 0x5eed5eedULL);
  nn::ParameterUpdater updater(cfg.optimizer, cfg.learning_rate, net.parameters());
  GcnGradients grads = net.make_gradients();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  {
    const Matrix p = predict(net, train.graphs);
    double loss = 0.0;
    for (std::size_t t = 0; t < spec.n_tasks; ++t) {
      double s = 0.0;
      std::size_t c = 0;
      for (std::size_t r = 0; r < n; ++r) {
        if (train.y.missing(r, t)) continue;
        const double q = std::clamp(p(r, t), 1e-15, 1.0 - 1e-15);
        s -= train.y.at(r, t) == 1 ? std::log(q) : std::log1p(-q);
        ++c;
      }
      if (c > 0) loss += s / static_cast<double>(c);
    }
    report.initial_loss = loss;
  }

  GcnCache cache;
  Matrix dlogits;
  std::optional<double> best_auc;
  GraphConvNet best_net = net;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    order_rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, n - start);
      const std::span<const std::size_t> rows(order.data() + start, len);
      const GraphBatch batch = batch_of(train.graphs, rows, net.featurizer());
      net.forward_batch(batch, cache);
      loss_sum += nn::masked_bce(cache.head.pre.back(), train.y, rows, &dlogits) * static_cast<double>(len);
      grads.zero();
      net.backward_batch(batch, cache, dlogits, &grads, nullptr);
      updater.step(net.parameters(), grads.spans());
    }
    nn::EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(n);
    if (valid != nullptr && !valid->graphs.empty()) {
      rec.valid_auc = nn::task_aucs(predict(net, valid->graphs), valid->y);
      rec.mean_valid_auc = mean_of(rec.valid_auc);
    }
    report.history.push_back(rec);
    if (rec.mean_valid_auc) {
      if (!best_auc || *rec.mean_valid_auc > *best_auc) {
        best_auc = rec.mean_valid_auc;
        best_net = net;
        report.best_epoch = epoch;
        since_best = 0;
      } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
        break;
      }
    }
  }
  if (best_auc) {
    result.net = std::move(best_net);
  } else {
    result.net = std::move(net);
    report.best_epoch = report.history.size();
  }
  return result;
}

}  // namespace molexplain::gcn
