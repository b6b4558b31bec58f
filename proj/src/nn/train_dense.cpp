#include <algorithm>
#include <cmath>
#include <numeric>

#include "molexplain/densenet.hpp"
#include "molexplain/metrics.hpp"
#include "molexplain/optim.hpp"
#include "molexplain/parallel.hpp"
#include "molexplain/rng.hpp"

namespace molexplain::nn {

void TrainConfig::validate() const {
  if (!seed) throw UserError("training requires an explicit seed");
  if (epochs == 0) throw UserError("epochs must be positive");
  if (batch_size == 0) throw UserError("batch size must be positive");
  if (!(learning_rate > 0.0)) throw UserError("learning rate must be positive");
}

double masked_bce(const Matrix& logits, const LabelMatrix& labels, std::span<const std::size_t> rows,
                  Matrix* dlogits) {
  const std::size_t batch = logits.rows();
  const std::size_t tasks = logits.cols();
  if (dlogits != nullptr) dlogits->resize(batch, tasks);
  double total = 0.0;
  for (std::size_t t = 0; t < tasks; ++t) {
    std::size_t count = 0;
    for (std::size_t b = 0; b < batch; ++b) count += labels.missing(rows[b], t) ? 0 : 1;
    if (count == 0) continue;
    const double inv = 1.0 / static_cast<double>(count);
    double task_loss = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      if (labels.missing(rows[b], t)) continue;
      const double z = logits(b, t);
      const double y = labels.at(rows[b], t);
      task_loss += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
      if (dlogits != nullptr) (*dlogits)(b, t) = (sigmoid(z) - y) * inv;
    }
    total += task_loss * inv;
  }
  return total;
}

Matrix predict(const DenseNet& net, const Matrix& x) {
  constexpr std::size_t kChunk = 256;
  Matrix out(x.rows(), net.n_tasks());
  const std::size_t chunks = (x.rows() + kChunk - 1) / kChunk;
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t start = c * kChunk;
    const std::size_t len = std::min(kChunk, x.rows() - start);
    Matrix chunk(len, x.cols());
    std::copy(x.data() + start * x.cols(), x.data() + (start + len) * x.cols(), chunk.data());
    DenseCache cache;
    net.forward_batch(chunk, cache);
    std::copy(cache.outputs.data(), cache.outputs.data() + cache.outputs.size(), out.data() + start * out.cols());
  });
  return out;
}

double dataset_loss(const DenseNet& net, const DenseData& data) {
  constexpr std::size_t kChunk = 256;
  DenseCache cache;
  // Per-task means over the whole set, not per chunk.
  const std::size_t tasks = net.n_tasks();
  std::vector<double> sums(tasks, 0.0);
  std::vector<std::size_t> counts(tasks, 0);
  for (std::size_t start = 0; start < data.x.rows(); start += kChunk) {
    const std::size_t len = std::min(kChunk, data.x.rows() - start);
    Matrix chunk(len, data.x.cols());
    std::copy(data.x.data() + start * data.x.cols(), data.x.data() + (start + len) * data.x.cols(), chunk.data());
    net.forward_batch(chunk, cache);
    const Matrix& z = cache.pre.back();
    for (std::size_t b = 0; b < len; ++b) {
      for (std::size_t t = 0; t < tasks; ++t) {
        if (data.y.missing(start + b, t)) continue;
        const double zz = z(b, t);
        sums[t] += std::max(zz, 0.0) - zz * data.y.at(start + b, t) + std::log1p(std::exp(-std::abs(zz)));
        ++counts[t];
      }
    }
  }
  double total = 0.0;
  for (std::size_t t = 0; t < tasks; ++t) {
    if (counts[t] > 0) total += sums[t] / static_cast<double>(counts[t]);
  }
  return total;
}

std::vector<std::optional<double>> task_aucs(const Matrix& scores, const LabelMatrix& labels) {
  std::vector<std::optional<double>> out;
  for (std::size_t t = 0; t < labels.tasks(); ++t) {
    std::vector<double> s;
    std::vector<int> y;
    for (std::size_t r = 0; r < labels.rows(); ++r) {
      if (labels.missing(r, t)) continue;
      s.push_back(scores(r, t));
      y.push_back(labels.at(r, t));
    }
    const auto pos = std::count(y.begin(), y.end(), 1);
    if (pos == 0 || pos == static_cast<long>(y.size())) {
      out.emplace_back();
    } else {
      out.emplace_back(auc(s, y));
    }
  }
  return out;
}

namespace {

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

DenseTrainResult train_dense(const DenseData& train, const DenseData* valid, const DenseSpec& spec,
                             const TrainConfig& cfg) {
  cfg.validate();
  const std::size_t n = train.x.rows();
  if (n == 0) throw UserError("training set is empty");
  if (train.y.rows() != n || train.y.tasks() != spec.n_tasks) throw UserError("label matrix does not match data");
  if (train.x.cols() != spec.input_dim) throw UserError("feature width does not match network input");

  DenseTrainResult result;
  TrainReport& report = result.report;
  for (std::size_t r = 0; r < n; ++r) {
    bool any = false;
    for (std::size_t t = 0; t < spec.n_tasks; ++t) any = any || !train.y.missing(r, t);
    if (!any) throw UserError("training sample " + std::to_string(r) + " has no unmasked label");
  }
  for (std::size_t t = 0; t < spec.n_tasks; ++t) {
    bool any = false;
    for (std::size_t r = 0; r < n && !any; ++r) any = !train.y.missing(r, t);
    if (!any) report.skipped_tasks.push_back(t);
  }

  DenseNet net = DenseNet::initialized(spec, *cfg.seed);
  Rng order_rng(*cfg.seed ^ 0x5eed5eedULL);
  ParameterUpdater updater(cfg.optimizer, cfg.learning_rate, net.parameters());
  DenseGradients grads = net.make_gradients();
  report.initial_loss = dataset_loss(net, train);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  DenseCache cache;
  Matrix dlogits;
  std::optional<double> best_auc;
  DenseNet best_net = net;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    order_rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, n - start);
      const std::span<const std::size_t> rows(order.data() + start, len);
      Matrix xb(len, train.x.cols());
      for (std::size_t b = 0; b < len; ++b) {
        std::copy_n(train.x.row(rows[b]).data(), train.x.cols(), xb.row(b).data());
      }
      net.forward_batch(xb, cache);
      loss_sum += masked_bce(cache.pre.back(), train.y, rows, &dlogits) * static_cast<double>(len);
      grads.zero();
      net.backward_batch(cache, dlogits, &grads, nullptr);
      updater.step(net.parameters(), grads.spans());
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(n);
    if (valid != nullptr && valid->x.rows() > 0) {
      rec.valid_auc = task_aucs(predict(net, valid->x), valid->y);
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

}  // namespace molexplain::nn
