#pragma once

#include "storex/rng.hpp"

namespace storex {

double std_normal_pdf(double x);
double std_normal_cdf(double x);

/// Quantile of the standard normal; |Phi(z) - p| stays below 1e-9 on (0, 1).
double std_normal_inv_cdf(double p);

/// One draw from Normal(mu, sigma^2) restricted to [lo, hi] by rejection.
/// Throws SamplingError after 10^4 rejected proposals.
double sample_truncated_normal(double mu, double sigma, double lo, double hi, Rng& rng);

/// Mean of Normal(mu, sigma^2) restricted to [lo, hi].
double truncated_normal_mean(double mu, double sigma, double lo, double hi);

}  // namespace storex
