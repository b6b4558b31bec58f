#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>

#include "molexplain/metrics.hpp"
#include "molexplain/parallel.hpp"
#include "molexplain/unitscreen.hpp"

namespace molexplain::unitscreen {

PresenceCalls presence_calls(const std::vector<chem::NamedPattern>& patterns,
                             const std::vector<chem::MolecularGraph>& molecules, std::size_t min_support) {
  PresenceCalls out;
  out.molecules = molecules.size();
  const std::size_t n = molecules.size();
  std::vector<std::vector<char>> rows(patterns.size(), std::vector<char>(n, 0));
  parallel_for(patterns.size() * n, [&](std::size_t k) {
    if (chem::has_match(patterns[k / n].pattern, molecules[k % n])) rows[k / n][k % n] = 1;
  });
  for (std::size_t j = 0; j < patterns.size(); ++j) {
    const chem::NamedPattern& p = patterns[j];
    std::vector<char>& row = rows[j];
    const auto support = static_cast<std::size_t>(std::count(row.begin(), row.end(), 1));
    if (support < min_support) {
      out.dropped.push_back(p.id);
      out.dropped_support.push_back(support);
      continue;
    }
    out.ids.push_back(p.id);
    out.sizes.push_back(p.pattern.node_count());
    out.present.push_back(std::move(row));
  }
  return out;
}

std::vector<Matrix> hidden_activations(const nn::DenseNet& net, const Matrix& x) {
  constexpr std::size_t kChunk = 256;
  const std::size_t layers = net.hidden_count();
  std::vector<Matrix> out(layers);
  for (std::size_t l = 0; l < layers; ++l) out[l].resize(x.rows(), net.spec().hidden[l]);
  nn::DenseCache cache;
  for (std::size_t start = 0; start < x.rows(); start += kChunk) {
    const std::size_t len = std::min(kChunk, x.rows() - start);
    Matrix chunk(len, x.cols());
    std::copy_n(x.row(start).data(), len * x.cols(), chunk.data());
    net.forward_batch(chunk, cache);
    for (std::size_t l = 0; l < layers; ++l) {
      const Matrix& h = cache.inputs[l + 1];
      std::copy_n(h.data(), h.size(), out[l].row(start).data());
    }
  }
  return out;
}

ScreeningReport screen_activations(const std::vector<Matrix>& activations, const PresenceCalls& calls,
                                   double alpha) {
  ScreeningReport report;
  const std::size_t n = calls.molecules;
  std::vector<std::size_t> usable;
  for (std::size_t j = 0; j < calls.ids.size(); ++j) {
    if (calls.present[j].size() != n) throw UserError("presence calls do not match the molecule count");
    const auto k = static_cast<std::size_t>(std::count(calls.present[j].begin(), calls.present[j].end(), 1));
    if (k == 0 || k == n) {
      report.skipped.push_back(calls.ids[j]);
    } else {
      usable.push_back(j);
    }
  }
  std::size_t units = 0;
  for (const Matrix& a : activations) {
    if (a.rows() != n) throw UserError("activation rows do not match the molecule count");
    units += a.cols();
  }
  report.tests = units * usable.size();
  const double family = static_cast<double>(report.tests);

  std::vector<std::size_t> first_layer(calls.ids.size(), 0);
  for (std::size_t l = 0; l < activations.size(); ++l) {
    const Matrix& act = activations[l];
    std::vector<std::vector<std::pair<std::size_t, Association>>> found(act.cols());
    parallel_for(act.cols(), [&](std::size_t unit) {
      std::vector<double> column(n);
      for (std::size_t m = 0; m < n; ++m) column[m] = act(m, unit);
      const std::vector<double> ranks = nn::midranks(column);
      std::vector<double> sorted = column;
      std::sort(sorted.begin(), sorted.end());
      double tie_term = 0.0;
      for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && sorted[j] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
      }
      const bool exact = tie_term == 0.0 && n <= kExactLimit;
      for (std::size_t j : usable) {
        const auto& present = calls.present[j];
        double rank_sum = 0.0;
        std::size_t n1 = 0;
        for (std::size_t m = 0; m < n; ++m) {
          if (present[m]) {
            rank_sum += ranks[m];
            ++n1;
          }
        }
        const std::size_t n2 = n - n1;
        const double u = rank_sum - static_cast<double>(n1) * (static_cast<double>(n1) + 1.0) / 2.0;
        const double p = exact ? exact_p_value(n1, n2, u) : normal_p_value(n1, n2, u, tie_term);
        const double adjusted = std::min(1.0, p * family);
        if (adjusted > alpha) continue;
        const double mean = static_cast<double>(n1) * static_cast<double>(n2) / 2.0;
        found[unit].emplace_back(
            j, Association{l + 1, unit, calls.ids[j], u, p, adjusted, u > mean ? 1 : (u < mean ? -1 : 0)});
      }
    });
    for (const auto& unit_found : found) {
      for (const auto& [j, a] : unit_found) {
        report.associations.push_back(a);
        if (first_layer[j] == 0) first_layer[j] = l + 1;
      }
    }
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t l = 1; l <= activations.size(); ++l) {
    std::vector<double> sizes;
    for (std::size_t j = 0; j < calls.ids.size(); ++j) {
      if (first_layer[j] == l) sizes.push_back(static_cast<double>(calls.sizes[j]));
    }
    LayerDiscovery d;
    d.layer = l;
    d.count = sizes.size();
    d.mean_size = nan;
    d.se_size = nan;
    if (!sizes.empty()) {
      double s = 0.0;
      for (double v : sizes) s += v;
      d.mean_size = s / static_cast<double>(sizes.size());
    }
    if (sizes.size() >= 2) {
      double ss = 0.0;
      for (double v : sizes) ss += (v - d.mean_size) * (v - d.mean_size);
      const double k = static_cast<double>(sizes.size());
      d.se_size = std::sqrt(ss / (k - 1.0)) / std::sqrt(k);
    }
    report.discovery.push_back(d);
  }
  return report;
}

ScreeningReport screen(const nn::DenseNet& net, const Matrix& x, const PresenceCalls& calls, double alpha) {
  if (x.rows() != calls.molecules) throw UserError("fingerprint rows do not match the molecule count");
  return screen_activations(hidden_activations(net, x), calls, alpha);
}

}  // namespace molexplain::unitscreen
