#include "storex/augment.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "storex/normal.hpp"

namespace storex {

namespace {

void check_inputs(double delta_mu, double alpha) {
  if (!(delta_mu > 0.0 && delta_mu < 1.0)) {
    throw ParameterError("delta_mu must lie in (0, 1), got " + std::to_string(delta_mu));
  }
  if (!(alpha > 0.0 && alpha < 0.5)) {
    throw ParameterError("alpha must lie in (0, 0.5), got " + std::to_string(alpha));
  }
}

std::string infeasible_message(double delta_mu, double alpha, double max_alpha) {
  std::ostringstream os;
  os << "infeasible (delta_mu, alpha) = (" << delta_mu << ", " << alpha
     << "): delta_mu + 4 sigma exceeds 1; largest feasible alpha for this delta_mu is "
     << max_alpha;
  return os.str();
}

double checked_sigma(double delta_mu, double alpha, double z) {
  const double sigma = delta_mu / (std::numbers::sqrt2 * std::abs(z));
  if (delta_mu + 4.0 * sigma > 1.0) {
    throw InfeasibleParams(delta_mu, alpha, max_feasible_alpha(delta_mu));
  }
  return sigma;
}

}  // namespace

InfeasibleParams::InfeasibleParams(double delta_mu, double alpha, double max_alpha)
    : ParameterError(infeasible_message(delta_mu, alpha, max_alpha)),
      delta_mu_(delta_mu),
      alpha_(alpha),
      max_alpha_(max_alpha) {}

double max_feasible_alpha(double delta_mu) {
  if (!(delta_mu > 0.0 && delta_mu < 1.0)) {
    throw ParameterError("delta_mu must lie in (0, 1), got " + std::to_string(delta_mu));
  }
  const double sigma_max = (1.0 - delta_mu) / 4.0;
  return std_normal_cdf(-delta_mu / (std::numbers::sqrt2 * sigma_max));
}

double solve_sigma(double delta_mu, double alpha) {
  check_inputs(delta_mu, alpha);
  return checked_sigma(delta_mu, alpha, std_normal_inv_cdf(alpha));
}

double solve_sigma_upper(double delta_mu, double alpha) {
  check_inputs(delta_mu, alpha);
  return checked_sigma(delta_mu, alpha, std_normal_inv_cdf(1.0 - alpha));
}

GaussianWeightParams sample_weight_params(double delta_mu, double alpha, Rng& rng) {
  GaussianWeightParams p;
  p.delta_mu = delta_mu;
  p.alpha = alpha;
  p.sigma = solve_sigma(delta_mu, alpha);
  const double lo = 2.0 * p.sigma;
  const double hi = 1.0 - delta_mu - 2.0 * p.sigma;
  p.mu2 = hi > lo ? rng.uniform(lo, hi) : lo;
  p.mu1 = p.mu2 + delta_mu;
  return p;
}

std::string to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::kGaussian:
      return "gaussian";
    case StrategyKind::kUniformProduct:
      return "uniform";
    case StrategyKind::kRandom:
      return "random";
  }
  return "?";
}

StrategyKind strategy_from_string(const std::string& s) {
  if (s == "gaussian") return StrategyKind::kGaussian;
  if (s == "uniform") return StrategyKind::kUniformProduct;
  if (s == "random") return StrategyKind::kRandom;
  throw ParameterError("unknown strategy '" + s + "' (valid: random, uniform, gaussian)");
}

Graph ablation_weights(const Graph& g, std::span<const Edge> expl_edges,
                       const WeightStrategy& strategy, Rng& rng,
                       const GaussianWeightParams* params, std::vector<double>* expl_weights,
                       std::vector<double>* other_weights) {
  if (strategy.kind == StrategyKind::kUniformProduct &&
      !(strategy.uniform_u > 0.0 && strategy.uniform_u < 1.0)) {
    throw ParameterError("uniform strategy: u must lie in (0, 1), got " +
                         std::to_string(strategy.uniform_u));
  }
  if (strategy.kind == StrategyKind::kGaussian && params == nullptr) {
    throw ContractError("ablation_weights: gaussian strategy needs weight parameters");
  }
  const std::vector<Edge>& edges = g.edges();
  std::vector<char> is_expl(edges.size(), 0);
  if (strategy.kind != StrategyKind::kRandom) {
    for (Edge e : expl_edges) {
      const int idx = g.edge_index(e);
      if (idx < 0) throw ContractError("ablation_weights: explanation edge not in graph");
      is_expl[static_cast<std::size_t>(idx)] = 1;
    }
  }

  std::vector<double> w(edges.size());
  for (std::size_t k = 0; k < edges.size(); ++k) {
    switch (strategy.kind) {
      case StrategyKind::kGaussian:
        w[k] = sample_truncated_normal(is_expl[k] ? params->mu1 : params->mu2, params->sigma, 0.0,
                                       1.0, rng);
        break;
      case StrategyKind::kUniformProduct: {
        const double u = strategy.uniform_u;
        const double w1 = u + (1.0 - u) * rng.uniform_open();
        w[k] = is_expl[k] ? w1 : w1 * rng.uniform_open();
        break;
      }
      case StrategyKind::kRandom:
        w[k] = rng.uniform_open();
        break;
    }
    std::vector<double>* sink = is_expl[k] ? expl_weights : other_weights;
    if (sink) sink->push_back(w[k]);
  }
  return g.reweighted(w);
}

Augmentation augment_graphs(const Dataset& ds, std::span<const EdgeMask> masks, double fraction,
                            double delta_mu, double alpha, Rng& rng,
                            const WeightStrategy& strategy) {
  if (masks.size() != ds.graphs.size()) {
    throw ContractError("augment_graphs: " + std::to_string(masks.size()) + " masks for " +
                        std::to_string(ds.graphs.size()) + " graphs");
  }
  Augmentation out;
  if (strategy.kind == StrategyKind::kGaussian) {
    out.params = sample_weight_params(delta_mu, alpha, rng);
  }
  out.data.splits = ds.splits;
  out.data.provenance = ds.provenance;
  out.data.seed = ds.seed;
  out.data.graphs.reserve(ds.graphs.size());
  const Rng base = rng.split(rng.next_u64());
  for (std::size_t i = 0; i < ds.graphs.size(); ++i) {
    const Graph& g = ds.graphs[i];
    validate_mask(masks[i], g);
    std::vector<Edge> expl;
    if (g.num_edges() > 0) expl = topk_edges(masks[i], fraction);
    Rng local = base.split(i);
    out.data.graphs.push_back(ablation_weights(g, expl, strategy, local, &out.params,
                                               &out.expl_weights, &out.other_weights));
  }
  return out;
}

}  // namespace storex
