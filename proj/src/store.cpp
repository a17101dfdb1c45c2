#include "storex/store.hpp"

#include <string>

#include "storex/errors.hpp"

namespace storex {

namespace {

// Stream tags for store_loop; each purpose and iteration gets its own child.
constexpr uint64_t kTrainStream = 1000;
constexpr uint64_t kExplainStream = 2000;
constexpr uint64_t kAugmentStream = 3000;

Dataset only_split(const Dataset& ds, Split s) {
  Dataset out;
  out.graphs = ds.subset(s);
  out.splits.assign(out.graphs.size(), s);
  out.provenance = ds.provenance;
  out.seed = ds.seed;
  return out;
}

}  // namespace

void validate(const StoreConfig& cfg) {
  if (cfg.topk_schedule.size() != cfg.iterations) {
    throw ParameterError("top-k schedule has " + std::to_string(cfg.topk_schedule.size()) +
                         " entries for " + std::to_string(cfg.iterations) + " iterations");
  }
  for (std::size_t i = 0; i < cfg.topk_schedule.size(); ++i) {
    const double k = cfg.topk_schedule[i];
    if (!(k > 0.0 && k <= 1.0)) {
      throw ParameterError("top-k fraction must lie in (0, 1], got " + std::to_string(k));
    }
    if (i > 0 && k > cfg.topk_schedule[i - 1]) {
      throw ParameterError("top-k schedule must be non-increasing");
    }
  }
  if (!(cfg.fidelity_topk > 0.0 && cfg.fidelity_topk <= 1.0)) {
    throw ParameterError("fidelity top-k fraction must lie in (0, 1]");
  }
  if (cfg.iterations > 0 && cfg.strategy.kind == StrategyKind::kGaussian) {
    solve_sigma(cfg.delta_mu, cfg.alpha);
  }
  if (cfg.strategy.kind == StrategyKind::kUniformProduct &&
      !(cfg.strategy.uniform_u > 0.0 && cfg.strategy.uniform_u < 1.0)) {
    throw ParameterError("uniform strategy: u must lie in (0, 1)");
  }
  if (cfg.mask_opt.size_coef < 0.0 || cfg.pg.size_coef < 0.0) {
    throw ParameterError("size coefficient must be >= 0");
  }
}

EdgeMask Explainer::explain(const GcnModel& model, const Graph& g, std::size_t index) const {
  if (kind == ExplainerKind::kPgExplainer) {
    if (!net) throw ContractError("explainer has no trained scorer");
    return pgexplainer_mask(*net, model, g);
  }
  if (g.num_edges() == 0) return EdgeMask{g.edges(), {}};
  Rng rng = Rng(seed).split(index);
  return gnnexplainer(model, g, mask_opt, rng);
}

std::vector<EdgeMask> Explainer::explain_all(const GcnModel& model,
                                             std::span<const Graph> graphs) const {
  std::vector<EdgeMask> out;
  out.reserve(graphs.size());
  for (std::size_t i = 0; i < graphs.size(); ++i) out.push_back(explain(model, graphs[i], i));
  return out;
}

Explainer train_explainer(const GcnModel& model, std::span<const Graph> graphs,
                          const StoreConfig& cfg, Rng& rng) {
  Explainer e;
  e.kind = cfg.explainer;
  e.mask_opt = cfg.mask_opt;
  e.seed = rng.next_u64();
  if (e.kind == ExplainerKind::kPgExplainer) e.net = train_pgexplainer(model, graphs, cfg.pg, rng);
  return e;
}

IterationRecord evaluate_iteration(const GcnModel& model, const Explainer& explainer,
                                   const Dataset& ds, const StoreConfig& cfg,
                                   std::size_t iteration) {
  const std::vector<Graph> test = ds.subset(Split::kTest);
  if (test.empty()) throw ContractError("evaluate_iteration: empty test split");
  IterationRecord rec;
  rec.iteration = iteration;
  rec.test_accuracy = evaluate_accuracy(model, test);
  const std::vector<EdgeMask> masks = explainer.explain_all(model, test);
  rec.auc = explanation_auc(masks, test, AucMode::kPooled);
  rec.auc_per_graph = explanation_auc(masks, test, AucMode::kPerGraphMean);

  const Rng fid_base(cfg.fidelity.seed);
  double plus = 0.0;
  double minus = 0.0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (test[i].num_edges() == 0) continue;
    const std::vector<Edge> expl = topk_edges(masks[i], cfg.fidelity_topk);
    Rng r_plus = fid_base.split(2 * i);
    Rng r_minus = fid_base.split(2 * i + 1);
    plus += fid_plus(model, test[i], expl, cfg.fidelity, r_plus);
    minus += fid_minus(model, test[i], expl, cfg.fidelity, r_minus);
    ++counted;
  }
  if (counted > 0) {
    rec.fid_plus = plus / static_cast<double>(counted);
    rec.fid_minus = minus / static_cast<double>(counted);
  }
  return rec;
}

StoreResult store_loop(const Dataset& ds, const StoreConfig& cfg, Rng& rng,
                       const std::function<void(const IterationRecord&)>& on_iteration) {
  validate(cfg);
  const Dataset train_ds = only_split(ds, Split::kTrain);
  const std::vector<Graph> val = ds.subset(Split::kVal);
  if (train_ds.graphs.empty()) throw ContractError("store_loop: empty training split");

  auto train_config = [&](std::size_t l) {
    TrainConfig t = cfg.train;
    t.seed = rng.split(kTrainStream + l).next_u64();
    return t;
  };
  auto record = [&](StoreResult& res, IterationRecord r) {
    res.history.push_back(r);
    if (on_iteration) on_iteration(r);
  };

  StoreResult res;
  try {
    res.model = train_gnn(train_ds.graphs, val, train_config(0)).model;
    Rng erng = rng.split(kExplainStream);
    res.explainer = train_explainer(res.model, train_ds.graphs, cfg, erng);
    res.vanilla_model = res.model;
    res.vanilla_explainer = res.explainer;
    record(res, evaluate_iteration(res.model, res.explainer, ds, cfg, 0));

    for (std::size_t l = 1; l <= cfg.iterations; ++l) {
      const std::vector<EdgeMask> masks = res.explainer.explain_all(res.model, train_ds.graphs);
      Rng arng = rng.split(kAugmentStream + l);
      Augmentation aug = augment_graphs(train_ds, masks, cfg.topk_schedule[l - 1], cfg.delta_mu,
                                        cfg.alpha, arng, cfg.strategy);
      if (cfg.strategy.kind == StrategyKind::kGaussian) res.weight_params.push_back(aug.params);
      res.last_expl_weights = std::move(aug.expl_weights);
      res.last_other_weights = std::move(aug.other_weights);

      std::vector<Graph> pool;
      if (!cfg.augmented_only) pool = train_ds.graphs;
      pool.insert(pool.end(), aug.data.graphs.begin(), aug.data.graphs.end());
      std::optional<GcnModel> init;
      if (cfg.warm_start) init = res.model;
      res.model = train_gnn(pool, val, train_config(l), init).model;

      Rng lrng = rng.split(kExplainStream + l);
      res.explainer = train_explainer(res.model, train_ds.graphs, cfg, lrng);
      record(res, evaluate_iteration(res.model, res.explainer, ds, cfg, l));
    }
  } catch (const std::exception& e) {
    throw StoreLoopError("store_loop failed after " + std::to_string(res.history.size()) +
                             " recorded iterations: " + e.what(),
                         res.history);
  }
  return res;
}

}  // namespace storex
