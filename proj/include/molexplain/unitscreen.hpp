#pragma once
// Hidden-unit screening: Mann-Whitney U tests of unit activations split by
// substructure presence, Bonferroni-corrected, with per-layer discovery
// statistics.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "molexplain/chem.hpp"
#include "molexplain/densenet.hpp"
#include "molexplain/matrix.hpp"
#include "molexplain/pattern.hpp"

namespace molexplain::unitscreen {

// Exact p-values are used up to this many observations when there are no ties.
inline constexpr std::size_t kExactLimit = 12;

enum class PMethod { Auto, Exact, Normal };

struct MannWhitneyResult {
  double u = 0.0;  // U of the first sample: R_a - n_a (n_a + 1) / 2
  double p = 1.0;  // two-sided
  bool exact = false;
  int direction = 0;  // +1 when the first sample ranks higher, -1 lower
};

// Throws UserError on an empty sample, or on PMethod::Exact with ties.
MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                                 PMethod method = PMethod::Auto);

// Two-sided exact p for U of the first sample, tie-free null distribution.
double exact_p_value(std::size_t n1, std::size_t n2, double u);

// Two-sided normal approximation with continuity correction. `tie_term` is
// sum(t^3 - t) over tie groups.
double normal_p_value(std::size_t n1, std::size_t n2, double u, double tie_term);

struct PresenceCalls {
  std::vector<std::string> ids;          // kept patterns
  std::vector<std::size_t> sizes;        // atoms per kept pattern
  std::vector<std::vector<char>> present;  // kept pattern x molecule
  std::vector<std::string> dropped;      // support below the threshold
  std::vector<std::size_t> dropped_support;
  std::size_t molecules = 0;
};

inline constexpr std::size_t kDefaultMinSupport = 20;

PresenceCalls presence_calls(const std::vector<chem::NamedPattern>& patterns,
                             const std::vector<chem::MolecularGraph>& molecules,
                             std::size_t min_support = kDefaultMinSupport);

struct Association {
  std::size_t layer = 0;  // 1-based hidden layer
  std::size_t unit = 0;
  std::string pattern;
  double u = 0.0;
  double p_raw = 1.0;
  double p_adjusted = 1.0;
  int direction = 0;  // +1: unit fires higher when the pattern is present
};

struct LayerDiscovery {
  std::size_t layer = 0;
  std::size_t count = 0;  // patterns first significant at this layer
  double mean_size = 0.0;  // NaN when count == 0
  double se_size = 0.0;    // NaN when count < 2
};

struct ScreeningReport {
  std::vector<Association> associations;  // adjusted p <= alpha
  std::vector<LayerDiscovery> discovery;
  std::size_t tests = 0;  // Bonferroni family size
  std::vector<std::string> skipped;  // present in every molecule or in none
};

// activations[l] is molecules x units for hidden layer l + 1.
ScreeningReport screen_activations(const std::vector<Matrix>& activations, const PresenceCalls& calls,
                                   double alpha = 0.05);

// Hidden activations of `net` on the rows of x, one matrix per hidden layer.
std::vector<Matrix> hidden_activations(const nn::DenseNet& net, const Matrix& x);

ScreeningReport screen(const nn::DenseNet& net, const Matrix& x, const PresenceCalls& calls, double alpha = 0.05);

}  // namespace molexplain::unitscreen
