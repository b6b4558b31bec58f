#include <cmath>

#include "molexplain/optim.hpp"

namespace molexplain::nn {

ParameterUpdater::ParameterUpdater(Optimizer kind, double learning_rate, const std::vector<std::span<double>>& params)
    : kind_(kind), lr_(learning_rate) {
  if (kind_ == Optimizer::Adam) {
    for (const auto& p : params) {
      m_.emplace_back(p.size(), 0.0);
      v_.emplace_back(p.size(), 0.0);
    }
  }
}

void ParameterUpdater::step(const std::vector<std::span<double>>& params, const std::vector<std::span<double>>& grads) {
  if (kind_ == Optimizer::Sgd) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      for (std::size_t j = 0; j < params[i].size(); ++j) params[i][j] -= lr_ * grads[i][j];
    }
    return;
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const double step = lr_ * std::sqrt(c2) / c1;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < params[i].size(); ++j) {
      const double g = grads[i][j];
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * g;
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * g * g;
      params[i][j] -= step * m[j] / (std::sqrt(v[j]) + eps_);
    }
  }
}

}  // namespace molexplain::nn
