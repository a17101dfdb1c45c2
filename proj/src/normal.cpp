#include "storex/normal.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "storex/errors.hpp"

namespace storex {

namespace {

constexpr int kMaxRejections = 10000;

// Acklam's rational approximation, relative error ~1e-9 before refinement.
constexpr std::array<double, 6> kA = {-3.969683028665376e+01, 2.209460984245205e+02,
                                      -2.759285104469687e+02, 1.383577518672690e+02,
                                      -3.066479806614716e+01, 2.506628277459239e+00};
constexpr std::array<double, 5> kB = {-5.447609879822406e+01, 1.615858368580409e+02,
                                      -1.556989798598866e+02, 6.680131188771972e+01,
                                      -1.328068155288572e+01};
constexpr std::array<double, 6> kC = {-7.784894002430293e-03, -3.223964580411365e-01,
                                      -2.400758277161838e+00, -2.549732539343734e+00,
                                      4.374664141464968e+00,  2.938163982698783e+00};
constexpr std::array<double, 4> kD = {7.784695709041462e-03, 3.224671290700398e-01,
                                      2.445134137142996e+00, 3.754408661907416e+00};

double acklam(double p) {
  constexpr double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((kC[0] * q + kC[1]) * q + kC[2]) * q + kC[3]) * q + kC[4]) * q + kC[5]) /
           ((((kD[0] * q + kD[1]) * q + kD[2]) * q + kD[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) return -acklam(1.0 - p);
  const double q = p - 0.5;
  const double r = q * q;
  return (((((kA[0] * r + kA[1]) * r + kA[2]) * r + kA[3]) * r + kA[4]) * r + kA[5]) * q /
         (((((kB[0] * r + kB[1]) * r + kB[2]) * r + kB[3]) * r + kB[4]) * r + 1.0);
}

}  // namespace

double std_normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double std_normal_inv_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw ParameterError("std_normal_inv_cdf: p must lie in (0, 1), got " + std::to_string(p));
  }
  double z = acklam(p);
  // Halley refinement against the erfc-based cdf.
  const double e = std_normal_cdf(z) - p;
  const double u = e / std_normal_pdf(z);
  z -= u / (1.0 + 0.5 * z * u);
  return z;
}

double sample_truncated_normal(double mu, double sigma, double lo, double hi, Rng& rng) {
  if (!(lo < hi)) throw ParameterError("sample_truncated_normal: need lo < hi");
  if (!(sigma > 0.0)) throw ParameterError("sample_truncated_normal: sigma must be positive");
  for (int i = 0; i < kMaxRejections; ++i) {
    const double x = rng.normal(mu, sigma);
    if (x >= lo && x <= hi) return x;
  }
  throw SamplingError("sample_truncated_normal: no draw in [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "] after " + std::to_string(kMaxRejections) +
                      " proposals (mu=" + std::to_string(mu) + ", sigma=" + std::to_string(sigma) +
                      ")");
}

double truncated_normal_mean(double mu, double sigma, double lo, double hi) {
  const double a = (lo - mu) / sigma;
  const double b = (hi - mu) / sigma;
  return mu + sigma * (std_normal_pdf(a) - std_normal_pdf(b)) /
                  (std_normal_cdf(b) - std_normal_cdf(a));
}

}  // namespace storex
