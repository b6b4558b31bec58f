#pragma once
// Feed-forward multi-task classifier: h^{l+1} = f(h^l W^l + b^l) with one
// sigmoid output per task.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "molexplain/labels.hpp"
#include "molexplain/matrix.hpp"

namespace molexplain::nn {

inline constexpr double kSeluLambda = 1.0507009873554805;
inline constexpr double kSeluAlpha = 1.6732632423543772;

enum class Activation { Selu, Relu, Identity, Sigmoid };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

double selu(double x);
double sigmoid(double x);
double activate(Activation a, double x);
// Derivative given the pre-activation value.
double activate_derivative(Activation a, double x);

// What F means when differentiating a task output.
enum class OutputMode { Probability, Logit };

struct DenseSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden;
  std::size_t n_tasks = 1;
  Activation hidden_activation = Activation::Selu;
  Activation output_activation = Activation::Sigmoid;

  friend bool operator==(const DenseSpec&, const DenseSpec&) = default;
};

// Named architectures: tox21-small (2 x 256), tox21-4x1024, tox21-4x2048,
// all SELU with sigmoid outputs.
DenseSpec dense_preset(const std::string& name, std::size_t input_dim, std::size_t n_tasks);
std::vector<std::string> dense_preset_names();

struct DenseLayer {
  Matrix weight;  // out x in
  std::vector<double> bias;
};

struct DenseGradients {
  std::vector<Matrix> weight;
  std::vector<std::vector<double>> bias;

  void zero();
  std::vector<std::span<double>> spans();
};

struct ForwardResult {
  std::vector<double> outputs;              // per task, after the output activation
  std::vector<double> logits;               // per task, before it
  std::vector<std::vector<double>> hidden;  // h^1 .. h^L
};

struct DenseCache {
  std::vector<Matrix> inputs;  // inputs[l] feeds layer l; inputs[0] is the batch
  std::vector<Matrix> pre;     // pre-activations per layer
  Matrix outputs;
};

class DenseNet {
 public:
  DenseNet() = default;
  // All parameters zero.
  explicit DenseNet(DenseSpec spec);
  // Fan-in scaled normal weights (variance 1/fan_in), zero biases.
  static DenseNet initialized(const DenseSpec& spec, std::uint64_t seed);

  const DenseSpec& spec() const { return spec_; }
  std::size_t input_dim() const { return spec_.input_dim; }
  std::size_t n_tasks() const { return spec_.n_tasks; }
  std::size_t hidden_count() const { return spec_.hidden.size(); }
  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  ForwardResult forward(std::span<const double> x) const;
  double output(std::span<const double> x, std::size_t task, OutputMode mode = OutputMode::Probability) const;

  void forward_batch(const Matrix& x, DenseCache& cache) const;
  // Backpropagates d(loss)/d(output-layer pre-activation). Gradients are
  // accumulated into `grads` and d(loss)/d(input) written to `dinput`;
  // either may be null.
  void backward_batch(const DenseCache& cache, const Matrix& dlogits, DenseGradients* grads, Matrix* dinput) const;

  // Exact dF/dx for one task.
  std::vector<double> grad_input(std::span<const double> x, std::size_t task,
                                 OutputMode mode = OutputMode::Probability) const;
  // Row b of the result is dF/dx at row b of `x`.
  Matrix grad_input_batch(const Matrix& x, std::size_t task, OutputMode mode = OutputMode::Probability) const;

  DenseGradients make_gradients() const;
  std::vector<std::span<double>> parameters();

  friend bool operator==(const DenseNet& a, const DenseNet& b);

 private:
  DenseSpec spec_;
  std::vector<DenseLayer> layers_;
};

// d(output)/d(pre-activation) for the output layer.
double output_derivative(Activation output_activation, double logit, OutputMode mode);

enum class Optimizer { Sgd, Adam };

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  Optimizer optimizer = Optimizer::Adam;
  std::optional<std::uint64_t> seed;  // required
  std::size_t patience = 0;           // 0 disables early stopping

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::vector<std::optional<double>> valid_auc;  // per task; empty optional = not computable
  std::optional<double> mean_valid_auc;
};

struct TrainReport {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double initial_loss = 0.0;
  std::vector<std::size_t> skipped_tasks;  // tasks without any training label
};

struct DenseData {
  Matrix x;
  LabelMatrix y;
};

struct DenseTrainResult {
  DenseNet net;
  TrainReport report;
};

// Minimises masked binary cross-entropy (each task averaged over its
// unmasked samples in the batch). Deterministic given cfg.seed.
DenseTrainResult train_dense(const DenseData& train, const DenseData* valid, const DenseSpec& spec,
                             const TrainConfig& cfg);

// Masked BCE on output-layer pre-activations for sigmoid outputs. Writes
// d(loss)/d(logit) into `dlogits` (same shape as `logits`).
double masked_bce(const Matrix& logits, const LabelMatrix& labels, std::span<const std::size_t> rows,
                  Matrix* dlogits);

// Task outputs for every row of x, evaluated in chunks.
Matrix predict(const DenseNet& net, const Matrix& x);

// Masked BCE over a whole data set.
double dataset_loss(const DenseNet& net, const DenseData& data);

// Per-task AUC on a data set; empty optional when a task lacks one class.
std::vector<std::optional<double>> task_aucs(const Matrix& scores, const LabelMatrix& labels);

}  // namespace molexplain::nn
