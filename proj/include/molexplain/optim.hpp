#pragma once

#include <span>
#include <vector>

#include "molexplain/densenet.hpp"

namespace molexplain::nn {

// Plain SGD or Adam over a fixed list of parameter blocks.
class ParameterUpdater {
 public:
  ParameterUpdater(Optimizer kind, double learning_rate, const std::vector<std::span<double>>& params);

  void step(const std::vector<std::span<double>>& params, const std::vector<std::span<double>>& grads);

 private:
  Optimizer kind_;
  double lr_;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  long t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace molexplain::nn
