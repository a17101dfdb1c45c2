#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "storex/augment.hpp"
#include "storex/eval.hpp"
#include "storex/explain.hpp"
#include "storex/gcn.hpp"
#include "storex/graph.hpp"
#include "storex/rng.hpp"

namespace storex {

struct StoreConfig {
  std::size_t iterations = 3;
  double delta_mu = 0.5;
  double alpha = 0.001;
  /// Top-k fraction used to pick explanatory edges at each iteration.
  std::vector<double> topk_schedule{0.9, 0.5, 0.1};
  ExplainerKind explainer = ExplainerKind::kPgExplainer;
  TrainConfig train;
  MaskOptConfig mask_opt;
  PgConfig pg;
  WeightStrategy strategy;
  /// Retrain on the weighted copies alone instead of original plus weighted.
  bool augmented_only = false;
  /// Start each retraining from the previous classifier instead of a fresh init.
  bool warm_start = false;
  FidelityConfig fidelity;
  /// Fraction of top-scored edges treated as the explanation for fidelity.
  double fidelity_topk = 0.2;
};

/// Throws ParameterError for an invalid config (schedule length or order,
/// fractions, infeasible delta_mu/alpha for the Gaussian strategy).
void validate(const StoreConfig& cfg);

/// A trained explainer bound to the classifier it explains.
struct Explainer {
  ExplainerKind kind = ExplainerKind::kPgExplainer;
  std::optional<PgNet> net;
  MaskOptConfig mask_opt;
  /// Seeds the per-graph mask optimization streams.
  uint64_t seed = 0;

  /// Mask for graph `g`; `index` keys the optimization stream so a graph
  /// gets the same mask regardless of call order.
  EdgeMask explain(const GcnModel& model, const Graph& g, std::size_t index) const;
  std::vector<EdgeMask> explain_all(const GcnModel& model, std::span<const Graph> graphs) const;
};

Explainer train_explainer(const GcnModel& model, std::span<const Graph> graphs,
                          const StoreConfig& cfg, Rng& rng);

struct IterationRecord {
  std::size_t iteration = 0;
  double test_accuracy = 0.0;
  /// Pooled edge AUC over test graphs.
  double auc = 0.0;
  double auc_per_graph = 0.0;
  double fid_plus = 0.0;
  double fid_minus = 0.0;
};

/// Test accuracy, explanation AUC and fidelity for one (classifier, explainer) pair.
IterationRecord evaluate_iteration(const GcnModel& model, const Explainer& explainer,
                                   const Dataset& ds, const StoreConfig& cfg, std::size_t iteration);

struct StoreResult {
  GcnModel vanilla_model;
  Explainer vanilla_explainer;
  GcnModel model;
  Explainer explainer;
  /// Entry 0 is the vanilla pair, entry l the pair after l refinements.
  std::vector<IterationRecord> history;
  /// Gaussian parameters drawn per iteration (empty for other strategies).
  std::vector<GaussianWeightParams> weight_params;
  /// Weights sampled in the last augmentation pass.
  std::vector<double> last_expl_weights;
  std::vector<double> last_other_weights;
};

/// Carries the history recorded before an iteration failed.
class StoreLoopError : public std::runtime_error {
 public:
  StoreLoopError(const std::string& what, std::vector<IterationRecord> history)
      : std::runtime_error(what), history_(std::move(history)) {}
  const std::vector<IterationRecord>& history() const { return history_; }

 private:
  std::vector<IterationRecord> history_;
};

/// Iterative refinement: train the classifier and explainer, then repeatedly
/// weight the training graphs by the current explanations, retrain the
/// classifier on original plus weighted graphs and retrain the explainer.
/// `on_iteration` sees each history record as soon as it exists.
StoreResult store_loop(const Dataset& ds, const StoreConfig& cfg, Rng& rng,
                       const std::function<void(const IterationRecord&)>& on_iteration = {});

}  // namespace storex
