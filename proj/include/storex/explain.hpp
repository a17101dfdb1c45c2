#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "storex/gcn.hpp"
#include "storex/graph.hpp"
#include "storex/ndiff.hpp"
#include "storex/rng.hpp"

namespace storex {

/// Importance score per undirected edge of one graph. `edges` equals the
/// graph's edges() and `scores` is aligned with it.
struct EdgeMask {
  std::vector<Edge> edges;
  std::vector<double> scores;

  std::size_t size() const { return edges.size(); }
  bool operator==(const EdgeMask& o) const = default;
};

/// Throws ContractError unless the keys match g.edges() and scores lie in [0, 1].
void validate_mask(const EdgeMask& mask, const Graph& g);

/// The ceil(fraction * |E|) highest-scoring edges, ties broken by (u, v)
/// order. Returned in descending score order.
std::vector<Edge> topk_edges(const EdgeMask& mask, double fraction);

enum class ExplainerKind { kPgExplainer, kGnnExplainer };

std::string to_string(ExplainerKind k);
ExplainerKind explainer_from_string(const std::string& s);

/// Explanation objective for a soft mask (E x 1, aligned with g.edges()):
/// cross-entropy of the masked prediction against `target` plus
/// size_coef * sum(mask) plus entropy_coef * mean elementwise mask entropy.
nd::Var explanation_loss(nd::Tape& tape, const GcnModel& model, const Graph& g, nd::Var mask,
                         int target, double size_coef, double entropy_coef);

struct MaskOptConfig {
  std::size_t epochs = 200;
  double learning_rate = 0.01;
  double size_coef = 0.005;
  double entropy_coef = 0.0;
  /// Standard deviation of the initial mask logits.
  double init_scale = 0.1;
};

/// Optimizes one sigmoid-mask logit per edge against the model's own
/// prediction on `g`. `loss_trace`, when given, receives the objective at
/// every epoch (before the update).
EdgeMask gnnexplainer(const GcnModel& model, const Graph& g, const MaskOptConfig& cfg, Rng& rng,
                      std::vector<double>* loss_trace = nullptr);

/// Relaxed Bernoulli sample sigmoid((logit + log u - log(1 - u)) / temperature).
double gumbel_edge_sample(double logit, double temperature, Rng& rng);

/// Differentiable form for a column of logits with fixed logistic noise
/// (noise[e] = log u_e - log(1 - u_e)).
nd::Var concrete_relaxation(nd::Var logits, std::span<const double> noise, double temperature);

/// Logistic noise log u - log(1 - u) with u ~ Uniform(0, 1).
double logistic_noise(Rng& rng);

struct PgConfig {
  std::size_t hidden = 64;
  std::size_t epochs = 30;
  double learning_rate = 3e-3;
  double weight_decay = 5e-4;
  double temperature_start = 5.0;
  double temperature_end = 1.0;
  double size_coef = 0.02;
  double entropy_coef = 0.0;
};

/// Temperature for `epoch` (0-based): geometric from start to end.
double pg_temperature(const PgConfig& cfg, std::size_t epoch);

/// Edge scorer: concat(h_u, h_v) -> hidden -> 1 with a relu in between.
struct PgNet {
  std::size_t input_dim = 0;
  std::size_t hidden = 0;
  nd::Tensor w1, b1, w2, b2;

  static PgNet init(std::size_t input_dim, std::size_t hidden, Rng& rng);

  std::vector<nd::Tensor*> parameters();
  std::vector<const nd::Tensor*> parameters() const;
  std::vector<std::string> parameter_names() const;
  void zero_grad();

  bool operator==(const PgNet& o) const;
};

/// Endpoint features of every edge of one graph in both orientations.
struct EdgeInputs {
  nd::Matrix forward;   // rows concat(h_u, h_v)
  nd::Matrix backward;  // rows concat(h_v, h_u)
};

EdgeInputs edge_inputs(const nd::Matrix& embeddings, std::span<const Edge> edges);

/// Symmetric edge logits (E x 1): the mean of both orientations.
nd::Var pg_edge_logits(nd::Tape& tape, const PgNet& net, const EdgeInputs& in);
nd::Var pg_edge_logits_trainable(nd::Tape& tape, PgNet& net, const EdgeInputs& in);

/// Trains a fresh scorer against `model` on `graphs` (edgeless graphs are skipped).
PgNet train_pgexplainer(const GcnModel& model, std::span<const Graph> graphs, const PgConfig& cfg,
                        Rng& rng);
/// Same, on the dataset's training split.
PgNet train_pgexplainer(const GcnModel& model, const Dataset& ds, const PgConfig& cfg, Rng& rng);

/// Deterministic mask: sigmoid of the symmetric edge logits.
EdgeMask pgexplainer_mask(const PgNet& net, const GcnModel& model, const Graph& g);

/// CSV rows graph_index,i,j,score.
void write_masks_csv(const std::filesystem::path& path, std::span<const EdgeMask> masks,
                     std::span<const std::size_t> graph_indices);

std::string pgnet_to_json(const PgNet& net);
PgNet pgnet_from_json(const std::string& text);
void save_pgnet(const PgNet& net, const std::filesystem::path& path);
PgNet load_pgnet(const std::filesystem::path& path);

}  // namespace storex
