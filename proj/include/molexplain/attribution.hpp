#pragma once
// Integrated Gradients over dense networks and per-atom aggregation of
// fingerprint-bit attributions.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "molexplain/chem.hpp"
#include "molexplain/densenet.hpp"
#include "molexplain/fingerprint.hpp"

namespace molexplain::attribution {

struct IgOptions {
  // Trapezoid rule over k = 0..m instead of the right-endpoint sum k = 1..m.
  bool trapezoid = false;
  nn::OutputMode mode = nn::OutputMode::Probability;
};

struct AttributionResult {
  std::vector<double> per_feature;
  std::vector<double> per_atom;  // empty unless attributed from a molecule
  std::size_t task = 0;
  std::vector<double> baseline;
  int steps = 0;
  double f_x = 0.0;
  double f_baseline = 0.0;
  double completeness_gap = 0.0;  // |sum(per_feature) - (f_x - f_baseline)|
};

// a_i = (x_i - x'_i) / m * sum_k dF/dx_i at x' + (k/m)(x - x').
std::vector<double> integrated_gradients(const nn::DenseNet& net, std::span<const double> x,
                                         std::span<const double> baseline, int steps, std::size_t task,
                                         const IgOptions& options = {});

AttributionResult attribute(const nn::DenseNet& net, std::span<const double> x, std::span<const double> baseline,
                            int steps, std::size_t task, const IgOptions& options = {});

// Fingerprint the molecule, attribute against the zero baseline and sum bit
// attributions onto the atoms of each bit's environments.
AttributionResult attribute_molecule(const nn::DenseNet& net, const chem::MolecularGraph& g,
                                     const fingerprint::FingerprintConfig& fp_cfg, int steps, std::size_t task,
                                     const IgOptions& options = {});

// per_atom[v] = sum of per_feature[b] over set bits b whose provenance
// contains v. Each atom counts once per bit.
std::vector<double> atomwise(const fingerprint::Fingerprint& fp, std::span<const double> per_feature,
                             std::size_t atom_count);

enum class RenderFormat { Json, Dot, Svg };

RenderFormat render_format_from_name(const std::string& name);

// Fill colour for a score on a diverging white-to-red (positive) and
// white-to-blue (negative) scale; max_abs maps to full saturation.
std::string score_color(double score, double max_abs);

std::string render_attribution(const chem::MolecularGraph& g, std::span<const double> per_atom,
                               RenderFormat format);

struct RenderedScores {
  std::vector<double> scores;
  std::string smiles;
  chem::MolecularGraph graph;  // atoms and bonds in document order
};

// Reads back a document produced by render_attribution(..., Json).
RenderedScores parse_attribution_json(const std::string& text);

}  // namespace molexplain::attribution
