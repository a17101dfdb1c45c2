#pragma once

#include <span>
#include <string>
#include <vector>

#include "storex/errors.hpp"
#include "storex/explain.hpp"
#include "storex/graph.hpp"
#include "storex/rng.hpp"

namespace storex {

/// Shared-sigma Gaussians for explanatory (mu1) and other (mu2) edge weights.
struct GaussianWeightParams {
  double delta_mu = 0.0;
  double alpha = 0.0;
  double sigma = 0.0;
  double mu2 = 0.0;
  double mu1 = 0.0;
};

/// Raised when (delta_mu, alpha) leaves no room for mu2 in [2 sigma, 1 - delta_mu - 2 sigma].
class InfeasibleParams : public ParameterError {
 public:
  InfeasibleParams(double delta_mu, double alpha, double max_alpha);
  double delta_mu() const { return delta_mu_; }
  double alpha() const { return alpha_; }
  /// Largest alpha that is feasible for this delta_mu.
  double max_feasible_alpha() const { return max_alpha_; }

 private:
  double delta_mu_;
  double alpha_;
  double max_alpha_;
};

/// sigma = delta_mu / (sqrt(2) |Phi^-1(alpha)|), so P(W1 < W2) = alpha for the
/// untruncated pair. Throws InfeasibleParams when delta_mu + 4 sigma > 1.
double solve_sigma(double delta_mu, double alpha);
/// The same sigma computed through Phi^-1(1 - alpha).
double solve_sigma_upper(double delta_mu, double alpha);
double max_feasible_alpha(double delta_mu);

/// sigma from solve_sigma, mu2 ~ Uniform(2 sigma, 1 - delta_mu - 2 sigma), mu1 = mu2 + delta_mu.
GaussianWeightParams sample_weight_params(double delta_mu, double alpha, Rng& rng);

enum class StrategyKind { kGaussian, kUniformProduct, kRandom };

struct WeightStrategy {
  StrategyKind kind = StrategyKind::kGaussian;
  /// Lower bound of Uniform(u, 1) for the uniform-product sampler.
  double uniform_u = 0.5;
};

std::string to_string(StrategyKind k);
/// Accepts gaussian, uniform, random.
StrategyKind strategy_from_string(const std::string& s);

/// Reweights one graph. Gaussian draws W1 ~ TN(mu1, sigma^2) on `expl_edges`
/// and W2 ~ TN(mu2, sigma^2) elsewhere, truncated to [0, 1] (needs `params`).
/// UniformProduct draws W1 ~ U(u, 1) on `expl_edges` and W1' * Z elsewhere.
/// Random ignores the explanation and draws every weight from U(0, 1).
/// Sampled weights are appended to the optional output vectors.
Graph ablation_weights(const Graph& g, std::span<const Edge> expl_edges,
                       const WeightStrategy& strategy, Rng& rng,
                       const GaussianWeightParams* params = nullptr,
                       std::vector<double>* expl_weights = nullptr,
                       std::vector<double>* other_weights = nullptr);

struct Augmentation {
  Dataset data;
  /// Set for the Gaussian strategy.
  GaussianWeightParams params;
  std::vector<double> expl_weights;
  std::vector<double> other_weights;
};

/// Weighted copy of every graph in `ds`: the top-`fraction` edges of its mask
/// are explanatory. One Gaussian parameter draw per call; graph i uses the
/// child stream rng.split(i). Labels, splits and ground truth are kept.
Augmentation augment_graphs(const Dataset& ds, std::span<const EdgeMask> masks, double fraction,
                            double delta_mu, double alpha, Rng& rng,
                            const WeightStrategy& strategy = {});

}  // namespace storex
