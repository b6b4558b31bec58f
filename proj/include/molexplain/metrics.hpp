#pragma once

#include <span>
#include <vector>

namespace molexplain::nn {

// Midranks (1-based) of `values`; ties share the mean of their positions.
std::vector<double> midranks(std::span<const double> values);

// Probability a random positive scores above a random negative, ties 1/2.
// Throws UserError if either class is absent.
double auc(std::span<const double> scores, std::span<const int> labels);

}  // namespace molexplain::nn
