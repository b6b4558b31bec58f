#pragma once
// Graph convolutional network over molecular graphs.
//
// Each layer forms (h_v, h_w) pairs for every bond, maps them with one
// shared matrix and ReLU, and pools the pairs of each atom into its new
// representation. Atom representations are pooled into a graph vector per
// layer; with skip connections the per-layer vectors are concatenated.
// A dense head turns the graph vector into task probabilities. Feeding a
// single atom's representation to the head instead gives a score for the
// substructure centred on that atom.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "molexplain/chem.hpp"
#include "molexplain/densenet.hpp"
#include "molexplain/labels.hpp"
#include "molexplain/matrix.hpp"

namespace molexplain::gcn {

enum class Pooling { Max, Sum, Mean };

std::string pooling_name(Pooling p);
Pooling pooling_from_name(const std::string& name);

// Initial atom vector: element one-hot (last slot = any other element)
// followed by counts of incident single/double/triple/aromatic bonds.
class AtomFeaturizer {
 public:
  AtomFeaturizer();
  std::size_t dim() const { return elements_.size() + 1 + 4; }
  std::size_t element_slot(int element) const;
  Matrix featurize(const chem::MolecularGraph& g) const;

 private:
  std::vector<int> elements_;
};

struct GcnSpec {
  std::size_t input_dim = 0;  // AtomFeaturizer::dim() for molecules
  std::vector<std::size_t> conv_widths;
  Pooling pooling = Pooling::Max;
  bool skip_connections = false;
  std::vector<std::size_t> head_hidden;
  nn::Activation head_activation = nn::Activation::Relu;
  std::size_t n_tasks = 1;

  std::size_t layer_count() const { return conv_widths.size(); }
  std::size_t head_input_dim() const;
  friend bool operator==(const GcnSpec&, const GcnSpec&) = default;
};

struct ConvLayer {
  Matrix weight;  // d_{l+1} x 2 d_l
  std::vector<double> bias;
};

// Molecules of a mini-batch merged into one disconnected graph.
struct GraphBatch {
  std::size_t molecules = 0;
  std::vector<std::size_t> atom_offset;  // size molecules + 1
  std::vector<std::vector<int>> neighbors;
  Matrix features;  // atoms x input_dim

  static GraphBatch from_graphs(const std::vector<const chem::MolecularGraph*>& graphs, const AtomFeaturizer& f);
  static GraphBatch from_features(const chem::MolecularGraph& g, const Matrix& features);
};

struct GcnCache {
  std::vector<Matrix> atom_reps;  // h^0 .. h^L, atoms x d_l
  std::vector<Matrix> pairs;      // per layer, pair rows (h_v, h_w)
  std::vector<Matrix> pair_pre;   // per layer, pre-activation of pairs
  std::vector<std::vector<std::size_t>> pair_offset;  // per layer, per atom (size atoms + 1)
  std::vector<std::vector<int>> pair_partner;         // per layer, partner atom (-1 = zero vector)
  std::vector<std::vector<std::size_t>> neighbor_argmax;  // per layer, atoms x d_{l+1}
  std::vector<std::vector<std::size_t>> graph_argmax;     // per pooled layer, molecules x d_l
  Matrix graph_reps;  // molecules x head input
  nn::DenseCache head;
};

struct GcnGradients {
  std::vector<Matrix> weight;
  std::vector<std::vector<double>> bias;
  nn::DenseGradients head;

  void zero();
  std::vector<std::span<double>> spans();
};

class GraphConvNet {
 public:
  GraphConvNet() = default;
  explicit GraphConvNet(GcnSpec spec);
  static GraphConvNet initialized(const GcnSpec& spec, std::uint64_t seed);

  const GcnSpec& spec() const { return spec_; }
  std::vector<ConvLayer>& conv_layers() { return conv_; }
  const std::vector<ConvLayer>& conv_layers() const { return conv_; }
  nn::DenseNet& head() { return head_; }
  const nn::DenseNet& head() const { return head_; }
  const AtomFeaturizer& featurizer() const { return featurizer_; }

  // Per-task probabilities. Throws UserError on an empty molecule.
  std::vector<double> forward_molecule(const chem::MolecularGraph& g) const;
  std::vector<double> forward_features(const chem::MolecularGraph& g, const Matrix& features) const;

  // Per-atom head inputs: h_v^L, or (h_v^0, ..., h_v^L) with skip connections.
  Matrix atom_head_inputs(const chem::MolecularGraph& g, const Matrix& features) const;

  void forward_batch(const GraphBatch& batch, GcnCache& cache) const;
  void backward_batch(const GraphBatch& batch, const GcnCache& cache, const Matrix& dlogits, GcnGradients* grads,
                      Matrix* dfeatures) const;

  GcnGradients make_gradients() const;
  std::vector<std::span<double>> parameters();

  friend bool operator==(const GraphConvNet& a, const GraphConvNet& b);

 private:
  void atom_pass(const GraphBatch& batch, GcnCache& cache) const;

  GcnSpec spec_;
  std::vector<ConvLayer> conv_;
  nn::DenseNet head_;
  AtomFeaturizer featurizer_;
};

// Named architectures.
GcnSpec ames_gcn_preset(std::size_t filters, std::size_t fc, std::size_t n_tasks);
// "ames-gcn-<L>x<filters>-fc<units>", e.g. ames-gcn-3x1024-fc512.
GcnSpec gcn_preset(const std::string& name, std::size_t n_tasks);

struct GraphData {
  std::vector<chem::MolecularGraph> graphs;
  LabelMatrix y;
};

struct GcnTrainResult {
  GraphConvNet net;
  nn::TrainReport report;
};

GcnTrainResult train_gcn(const GraphData& train, const GraphData* valid, const GcnSpec& spec,
                         const nn::TrainConfig& cfg);

// Probabilities for every graph (molecules x tasks).
Matrix predict(const GraphConvNet& net, const std::vector<chem::MolecularGraph>& graphs);

struct SubstructureScore {
  std::size_t molecule = 0;
  int center = 0;
  int radius = 0;
  double score = 0.0;
  std::vector<int> atoms;  // receptive field, sorted
};

// One score per atom: the head applied to that atom's representation.
std::vector<SubstructureScore> score_substructures(const GraphConvNet& net, const chem::MolecularGraph& g,
                                                   std::size_t task, std::size_t molecule_id = 0);

// Canonical SMILES of the heavy-atom subgraph induced by `atoms`, hydrogens
// and ring flags ignored. Identical strings mean identical fragments.
std::string fragment_smiles(const chem::MolecularGraph& g, const std::vector<int>& atoms);

struct ExtractedFragment {
  std::string smiles;
  double score = 0.0;
  std::size_t source_molecule = 0;  // validation molecule of the top-scoring occurrence
  SubstructureScore best;
  std::size_t support = 0;    // test molecules containing the fragment
  std::size_t positives = 0;  // of those, labelled positive
  std::optional<double> ppv;  // undefined when support == 0
  bool low_support = false;   // support < 5
  chem::MolecularGraph fragment;
};

inline constexpr std::size_t kMinPpvSupport = 5;

// Scores every validation substructure, keeps the best score per distinct
// fragment, and reports test-set PPV for the k highest.
std::vector<ExtractedFragment> extract_top_substructures(const GraphConvNet& net,
                                                         const std::vector<chem::MolecularGraph>& validation,
                                                         const GraphData& test, std::size_t task, std::size_t k);

}  // namespace molexplain::gcn
