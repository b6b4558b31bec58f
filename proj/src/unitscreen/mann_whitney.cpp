#include <algorithm>
#include <cmath>
#include <numeric>

#include "molexplain/metrics.hpp"
#include "molexplain/unitscreen.hpp"

namespace molexplain::unitscreen {

namespace {

// counts[u] = number of rank assignments with U = u for sample sizes n1, n2.
std::vector<double> u_distribution(std::size_t n1, std::size_t n2) {
  // f[i][j][u] built by the recurrence f(i,j) = f(i-1,j) shifted by j + f(i,j-1).
  std::vector<std::vector<std::vector<double>>> f(n1 + 1, std::vector<std::vector<double>>(n2 + 1));
  for (std::size_t i = 0; i <= n1; ++i) {
    for (std::size_t j = 0; j <= n2; ++j) {
      auto& cur = f[i][j];
      cur.assign(i * j + 1, 0.0);
      if (i == 0 || j == 0) {
        cur[0] = 1.0;
        continue;
      }
      const auto& a = f[i - 1][j];
      for (std::size_t u = 0; u < a.size(); ++u) cur[u + j] += a[u];
      const auto& b = f[i][j - 1];
      for (std::size_t u = 0; u < b.size(); ++u) cur[u] += b[u];
    }
  }
  return f[n1][n2];
}

}  // namespace

double exact_p_value(std::size_t n1, std::size_t n2, double u) {
  const std::vector<double> counts = u_distribution(n1, n2);
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  const auto k = static_cast<std::size_t>(std::llround(u));
  double lower = 0.0, upper = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (i <= k) lower += counts[i];
    if (i >= k) upper += counts[i];
  }
  return std::min(1.0, 2.0 * std::min(lower, upper) / total);
}

double normal_p_value(std::size_t n1, std::size_t n2, double u, double tie_term) {
  const double a = static_cast<double>(n1), b = static_cast<double>(n2);
  const double n = a + b;
  const double mean = a * b / 2.0;
  double var = a * b / 12.0 * (n + 1.0);
  if (n > 1.0) var -= a * b * tie_term / (12.0 * n * (n - 1.0));
  if (!(var > 0.0)) return 1.0;
  const double z = std::max(0.0, std::abs(u - mean) - 0.5) / std::sqrt(var);
  return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b, PMethod method) {
  if (a.empty() || b.empty()) throw UserError("Mann-Whitney U needs two non-empty samples");
  std::vector<double> all(a.begin(), a.end());
  all.insert(all.end(), b.begin(), b.end());
  const std::vector<double> ranks = nn::midranks(all);
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) rank_sum += ranks[i];
  const double n1 = static_cast<double>(a.size());
  MannWhitneyResult r;
  r.u = rank_sum - n1 * (n1 + 1.0) / 2.0;
  const double mean = n1 * static_cast<double>(b.size()) / 2.0;
  r.direction = r.u > mean ? 1 : (r.u < mean ? -1 : 0);

  std::vector<double> sorted = all;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const bool ties = tie_term > 0.0;
  if (method == PMethod::Exact && ties) throw UserError("exact Mann-Whitney p requires tie-free samples");
  const bool exact = method == PMethod::Exact || (method == PMethod::Auto && !ties && all.size() <= kExactLimit);
  r.exact = exact;
  r.p = exact ? exact_p_value(a.size(), b.size(), r.u) : normal_p_value(a.size(), b.size(), r.u, tie_term);
  return r;
}

}  // namespace molexplain::unitscreen
