#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "storex/graph.hpp"
#include "storex/ndiff.hpp"
#include "storex/rng.hpp"

namespace storex {

/// Graph-level pooling of the last convolution layer.
enum class Readout { kMean, kMax, kMeanMax };

std::string to_string(Readout r);
Readout readout_from_string(const std::string& s);

/// Three graph-convolution layers (d -> h -> h -> h), a pooled readout and a
/// linear classifier. kMeanMax concatenates both poolings (2h inputs).
struct GcnModel {
  std::size_t input_dim = 0;
  std::size_t hidden = 0;
  std::size_t classes = 0;
  Readout readout = Readout::kMeanMax;
  nd::Tensor w1, b1, w2, b2, w3, b3, w_out, b_out;

  /// Glorot-uniform weights, zero biases.
  static GcnModel init(std::size_t input_dim, std::size_t hidden, std::size_t classes, Rng& rng,
                       Readout readout = Readout::kMeanMax);
  /// All-zero parameters.
  static GcnModel zeros(std::size_t input_dim, std::size_t hidden, std::size_t classes,
                        Readout readout = Readout::kMeanMax);

  std::size_t readout_width() const { return readout == Readout::kMeanMax ? 2 * hidden : hidden; }

  std::vector<nd::Tensor*> parameters();
  std::vector<const nd::Tensor*> parameters() const;
  std::vector<std::string> parameter_names() const;
  void zero_grad();

  bool operator==(const GcnModel& o) const;
};

/// Sets each convolution bias to minus the per-unit median pre-activation
/// over all nodes of `graphs`, layer by layer. With constant node features
/// and zero biases every relu would otherwise be either on or off for all
/// nodes at once.
void center_biases(GcnModel& model, std::span<const Graph> graphs);

/// D^{-1/2} (A + I) D^{-1/2} with D the row sums of A + I.
nd::Matrix normalize_adjacency(const nd::Matrix& a);

struct GcnOutput {
  nd::Matrix log_probs;   // 1 x classes
  nd::Matrix embeddings;  // n x hidden, last convolution layer
};

GcnOutput gcn_forward(const GcnModel& model, const Graph& g);
/// Forward on a raw weighted adjacency (normalization applied inside).
GcnOutput gcn_forward(const GcnModel& model, const nd::Matrix& adjacency,
                      const nd::Matrix& features);

struct GcnVars {
  nd::Var log_probs;
  nd::Var embeddings;
};

/// Records the forward pass on `tape` with the model held constant;
/// `normalized_adj` is the already-normalized propagation matrix.
GcnVars gcn_forward(nd::Tape& tape, const GcnModel& model, nd::Var normalized_adj,
                    nd::Var features);
/// Same, registering model parameters as differentiable leaves.
GcnVars gcn_forward_trainable(nd::Tape& tape, GcnModel& model, nd::Var normalized_adj,
                              nd::Var features);
/// Forward on a raw weighted adjacency recorded on the tape, so gradients can
/// flow into edge weights.
GcnVars gcn_forward_weighted(nd::Tape& tape, const GcnModel& model, nd::Var adjacency,
                             nd::Var features);

/// Argmax of the log-probabilities; ties go to the lower class index.
int argmax_class(const nd::Matrix& log_probs);
int predict(const GcnModel& model, const Graph& g);

struct TrainConfig {
  std::size_t epochs = 300;
  double learning_rate = 1e-3;
  uint64_t seed = 0;
  std::size_t hidden = 20;
  /// Stop after this many epochs without a better checkpoint (higher validation
  /// accuracy, or equal accuracy with lower loss).
  std::size_t patience = 50;
  /// Graphs per Adam step (gradients averaged over the batch).
  std::size_t batch_size = 32;
  std::size_t classes = 2;
  Readout readout = Readout::kMeanMax;
  /// Apply center_biases to the training graphs after random initialization.
  bool center_biases = true;
};

struct TrainResult {
  GcnModel model;
  std::size_t best_epoch = 0;
  std::size_t epochs_run = 0;
  double best_val_accuracy = 0.0;
  double best_val_loss = 0.0;
  /// Best-so-far validation loss after each epoch.
  std::vector<double> best_val_loss_trace;
};

/// Minimizes mean negative log-likelihood over `train` with Adam and returns the
/// parameters of the best validation epoch (higher accuracy, then lower loss).
/// When `val` is empty the training set doubles as validation. `warm_start`
/// replaces the random initialization.
TrainResult train_gnn(std::span<const Graph> train, std::span<const Graph> val,
                      const TrainConfig& cfg, const std::optional<GcnModel>& warm_start = std::nullopt);
/// Trains on the dataset's train split and selects on its val split.
GcnModel train_gnn(const Dataset& ds, const TrainConfig& cfg);

double mean_nll(const GcnModel& model, std::span<const Graph> graphs);
double evaluate_accuracy(const GcnModel& model, std::span<const Graph> graphs);

void save_model(const GcnModel& model, const std::filesystem::path& path);
GcnModel load_model(const std::filesystem::path& path);
std::string model_to_json(const GcnModel& model);
GcnModel model_from_json(const std::string& text);

}  // namespace storex
