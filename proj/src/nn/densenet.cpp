#include <cmath>

#include "molexplain/densenet.hpp"
#include "molexplain/kernels.hpp"
#include "molexplain/rng.hpp"

namespace molexplain::nn {

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::Selu: return "selu";
    case Activation::Relu: return "relu";
    case Activation::Identity: return "identity";
    case Activation::Sigmoid: return "sigmoid";
  }
  return "unknown";
}

Activation activation_from_name(const std::string& name) {
  if (name == "selu") return Activation::Selu;
  if (name == "relu") return Activation::Relu;
  if (name == "identity") return Activation::Identity;
  if (name == "sigmoid") return Activation::Sigmoid;
  throw UserError("unknown activation '" + name + "'");
}

double selu(double x) { return x > 0.0 ? kSeluLambda * x : kSeluLambda * kSeluAlpha * std::expm1(x); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double activate(Activation a, double x) {
  switch (a) {
    case Activation::Selu: return selu(x);
    case Activation::Relu: return x > 0.0 ? x : 0.0;
    case Activation::Identity: return x;
    case Activation::Sigmoid: return sigmoid(x);
  }
  return x;
}

double activate_derivative(Activation a, double x) {
  switch (a) {
    case Activation::Selu: return x > 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(x);
    case Activation::Relu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::Identity: return 1.0;
    case Activation::Sigmoid: {
      const double s = sigmoid(x);
      return s * (1.0 - s);
    }
  }
  return 1.0;
}

double output_derivative(Activation output_activation, double logit, OutputMode mode) {
  if (mode == OutputMode::Logit) return 1.0;
  return activate_derivative(output_activation, logit);
}

void DenseGradients::zero() {
  for (Matrix& w : weight) w.fill(0.0);
  for (auto& b : bias) b.assign(b.size(), 0.0);
}

std::vector<std::span<double>> DenseGradients::spans() {
  std::vector<std::span<double>> out;
  for (std::size_t l = 0; l < weight.size(); ++l) {
    out.push_back(weight[l].flat());
    out.push_back(bias[l]);
  }
  return out;
}

DenseNet::DenseNet(DenseSpec spec) : spec_(std::move(spec)) {
  if (spec_.input_dim == 0) throw UserError("dense net input dimension must be positive");
  if (spec_.n_tasks == 0) throw UserError("dense net needs at least one task");
  std::size_t in = spec_.input_dim;
  for (std::size_t width : spec_.hidden) {
    if (width == 0) throw UserError("hidden layer width must be positive");
    layers_.push_back({Matrix(width, in), std::vector<double>(width, 0.0)});
    in = width;
  }
  layers_.push_back({Matrix(spec_.n_tasks, in), std::vector<double>(spec_.n_tasks, 0.0)});
}

std::vector<std::string> dense_preset_names() { return {"tox21-small", "tox21-4x1024", "tox21-4x2048"}; }

DenseSpec dense_preset(const std::string& name, std::size_t input_dim, std::size_t n_tasks) {
  DenseSpec spec;
  spec.input_dim = input_dim;
  spec.n_tasks = n_tasks;
  if (name == "tox21-small") {
    spec.hidden = {256, 256};
  } else if (name == "tox21-4x1024") {
    spec.hidden = {1024, 1024, 1024, 1024};
  } else if (name == "tox21-4x2048") {
    spec.hidden = {2048, 2048, 2048, 2048};
  } else {
    throw UserError("unknown dense preset '" + name + "'");
  }
  return spec;
}

DenseNet DenseNet::initialized(const DenseSpec& spec, std::uint64_t seed) {
  DenseNet net(spec);
  Rng rng(seed);
  for (DenseLayer& layer : net.layers_) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(layer.weight.cols()));
    for (double& w : layer.weight.flat()) w = scale * rng.normal();
  }
  return net;
}

bool operator==(const DenseNet& a, const DenseNet& b) {
  if (!(a.spec_ == b.spec_) || a.layers_.size() != b.layers_.size()) return false;
  for (std::size_t l = 0; l < a.layers_.size(); ++l) {
    if (!(a.layers_[l].weight == b.layers_[l].weight) || a.layers_[l].bias != b.layers_[l].bias) return false;
  }
  return true;
}

void DenseNet::forward_batch(const Matrix& x, DenseCache& cache) const {
  if (x.cols() != spec_.input_dim) {
    throw UserError("input dimension mismatch: expected " + std::to_string(spec_.input_dim) + ", got " +
                    std::to_string(x.cols()));
  }
  const auto& k = kernels::active();
  const std::size_t batch = x.rows();
  const std::size_t n_layers = layers_.size();
  cache.inputs.resize(n_layers);
  cache.pre.resize(n_layers);
  cache.inputs[0] = x;
  for (std::size_t l = 0; l < n_layers; ++l) {
    const DenseLayer& layer = layers_[l];
    const std::size_t out = layer.weight.rows();
    Matrix& z = cache.pre[l];
    z.resize(batch, out);
    k.gemm_nt(batch, out, layer.weight.cols(), cache.inputs[l].data(), layer.weight.data(), z.data());
    const bool last = l + 1 == n_layers;
    const Activation act = last ? spec_.output_activation : spec_.hidden_activation;
    Matrix& h = last ? cache.outputs : cache.inputs[l + 1];
    h.resize(batch, out);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t j = 0; j < out; ++j) {
        z(b, j) += layer.bias[j];
        h(b, j) = activate(act, z(b, j));
      }
    }
  }
}

void DenseNet::backward_batch(const DenseCache& cache, const Matrix& dlogits, DenseGradients* grads,
                              Matrix* dinput) const {
  const auto& k = kernels::active();
  const std::size_t batch = dlogits.rows();
  Matrix delta = dlogits;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const DenseLayer& layer = layers_[l];
    const std::size_t out = layer.weight.rows();
    const std::size_t in = layer.weight.cols();
    if (grads != nullptr) {
      k.gemm_tn_acc(out, in, batch, delta.data(), cache.inputs[l].data(), grads->weight[l].data());
      auto& gb = grads->bias[l];
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t j = 0; j < out; ++j) gb[j] += delta(b, j);
      }
    }
    if (l == 0 && dinput == nullptr) break;
    Matrix below(batch, in);
    k.gemm_nn_acc(batch, in, out, delta.data(), layer.weight.data(), below.data());
    if (l == 0) {
      *dinput = std::move(below);
      break;
    }
    const Matrix& zprev = cache.pre[l - 1];
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t j = 0; j < in; ++j) below(b, j) *= activate_derivative(spec_.hidden_activation, zprev(b, j));
    }
    delta = std::move(below);
  }
}

ForwardResult DenseNet::forward(std::span<const double> x) const {
  Matrix batch(1, x.size());
  std::copy(x.begin(), x.end(), batch.data());
  DenseCache cache;
  forward_batch(batch, cache);
  ForwardResult r;
  r.outputs.assign(cache.outputs.data(), cache.outputs.data() + cache.outputs.cols());
  const Matrix& z = cache.pre.back();
  r.logits.assign(z.data(), z.data() + z.cols());
  for (std::size_t l = 1; l < cache.inputs.size(); ++l) {
    r.hidden.emplace_back(cache.inputs[l].data(), cache.inputs[l].data() + cache.inputs[l].cols());
  }
  return r;
}

double DenseNet::output(std::span<const double> x, std::size_t task, OutputMode mode) const {
  if (task >= spec_.n_tasks) throw UserError("task index out of range");
  const ForwardResult r = forward(x);
  return mode == OutputMode::Logit ? r.logits[task] : r.outputs[task];
}

Matrix DenseNet::grad_input_batch(const Matrix& x, std::size_t task, OutputMode mode) const {
  if (task >= spec_.n_tasks) throw UserError("task index " + std::to_string(task) + " out of range");
  DenseCache cache;
  forward_batch(x, cache);
  Matrix dlogits(x.rows(), spec_.n_tasks);
  for (std::size_t b = 0; b < x.rows(); ++b) {
    dlogits(b, task) = output_derivative(spec_.output_activation, cache.pre.back()(b, task), mode);
  }
  Matrix dx;
  backward_batch(cache, dlogits, nullptr, &dx);
  return dx;
}

std::vector<double> DenseNet::grad_input(std::span<const double> x, std::size_t task, OutputMode mode) const {
  Matrix batch(1, x.size());
  std::copy(x.begin(), x.end(), batch.data());
  const Matrix g = grad_input_batch(batch, task, mode);
  return {g.data(), g.data() + g.cols()};
}

DenseGradients DenseNet::make_gradients() const {
  DenseGradients g;
  for (const DenseLayer& layer : layers_) {
    g.weight.emplace_back(layer.weight.rows(), layer.weight.cols());
    g.bias.emplace_back(layer.bias.size(), 0.0);
  }
  return g;
}

std::vector<std::span<double>> DenseNet::parameters() {
  std::vector<std::span<double>> out;
  for (DenseLayer& layer : layers_) {
    out.push_back(layer.weight.flat());
    out.push_back(layer.bias);
  }
  return out;
}

}  // namespace molexplain::nn
