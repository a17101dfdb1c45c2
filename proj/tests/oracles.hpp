#pragma once

// Reference implementations used only by the tests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "storex/graph.hpp"
#include "storex/ndiff.hpp"
#include "storex/rng.hpp"

namespace oracle {

using storex::nd::Matrix;
using storex::nd::Tape;
using storex::nd::Tensor;
using storex::nd::Var;
using ScalarFn = std::function<Var(Tape&, Var)>;

inline Matrix random_matrix(storex::Rng& rng, std::size_t rows, std::size_t cols, double lo = -1.0,
                            double hi = 1.0) {
  Matrix m(rows, cols);
  for (double& x : m.data()) x = rng.uniform(lo, hi);
  return m;
}

inline double value_at(const ScalarFn& f, const Matrix& x) {
  Tape tape;
  return f(tape, tape.constant(x)).item();
}

inline Matrix autodiff_gradient(const ScalarFn& f, const Matrix& x) {
  Tensor t(x, true);
  Tape tape;
  storex::nd::backward(f(tape, tape.leaf(t)));
  return t.grad;
}

/// Central differences, one coordinate at a time.
inline Matrix numeric_gradient(const ScalarFn& f, const Matrix& x, double h = 1e-6) {
  Matrix g(x.rows(), x.cols());
  Matrix probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe.data()[i];
    probe.data()[i] = orig + h;
    const double up = value_at(f, probe);
    probe.data()[i] = orig - h;
    const double down = value_at(f, probe);
    probe.data()[i] = orig;
    g.data()[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// max_i |a_i - n_i| / max(|a_i|, |n_i|, floor). The floor keeps coordinates
/// whose true gradient is zero from dividing noise by noise.
inline double max_relative_error(const Matrix& analytic, const Matrix& numeric, double floor = 1e-4) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double a = analytic.data()[i];
    const double n = numeric.data()[i];
    worst = std::max(worst, std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor}));
  }
  return worst;
}

inline double gradient_error(const ScalarFn& f, const Matrix& x) {
  return max_relative_error(autodiff_gradient(f, x), numeric_gradient(f, x));
}

/// O(n^2) count over all positive/negative pairs, ties worth one half.
inline double pairwise_auc(std::span<const double> scores, std::span<const int> labels) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) wins += 1.0;
      if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

/// D^{-1/2}(A + I)D^{-1/2} written directly from the definition.
inline Matrix normalized(const Matrix& a) {
  const std::size_t n = a.rows();
  std::vector<double> deg(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) deg[i] += a(i, j);
  }
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out(i, j) = (a(i, j) + (i == j ? 1.0 : 0.0)) / std::sqrt(deg[i] * deg[j]);
    }
  }
  return out;
}

/// Connected random graph: a random tree plus `extra` chords, random weights in (0.2, 1].
inline storex::Graph random_graph(storex::Rng& rng, std::size_t n, std::size_t extra,
                                  std::size_t feature_dim = 3, int label = 0) {
  std::vector<storex::Edge> edges;
  for (std::size_t v = 1; v < n; ++v) {
    edges.push_back(storex::Edge::make(static_cast<int>(rng.uniform_index(v)), static_cast<int>(v)));
  }
  for (std::size_t k = 0; k < extra; ++k) {
    const int a = static_cast<int>(rng.uniform_index(n));
    const int b = static_cast<int>(rng.uniform_index(n));
    if (a == b) continue;
    const storex::Edge e = storex::Edge::make(a, b);
    if (std::find(edges.begin(), edges.end(), e) == edges.end()) edges.push_back(e);
  }
  std::vector<double> w;
  for (std::size_t i = 0; i < edges.size(); ++i) w.push_back(rng.uniform(0.2, 1.0));
  return storex::Graph::from_edges(random_matrix(rng, n, feature_dim, 0.0, 1.0), edges, w, label);
}

}  // namespace oracle
