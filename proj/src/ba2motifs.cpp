#include "storex/ba2motifs.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "storex/errors.hpp"

namespace storex {

Graph ba_base(std::size_t n_nodes, std::size_t m, Rng& rng, std::size_t feature_dim) {
  if (n_nodes < 2) throw ParameterError("ba_base: n_nodes must be >= 2");
  if (m < 1) throw ParameterError("ba_base: edges_per_new_node must be >= 1");
  const std::size_t seed_size = std::max<std::size_t>(2, m);
  if (seed_size > n_nodes) {
    throw ParameterError("ba_base: edges_per_new_node exceeds n_nodes");
  }

  std::vector<Edge> edges;
  // Each endpoint occurrence; sampling uniformly from it is degree-proportional.
  std::vector<int> endpoints;
  for (std::size_t i = 0; i < seed_size; ++i) {
    for (std::size_t j = i + 1; j < seed_size; ++j) {
      edges.push_back({static_cast<int>(i), static_cast<int>(j)});
      endpoints.push_back(static_cast<int>(i));
      endpoints.push_back(static_cast<int>(j));
    }
  }
  for (std::size_t v = seed_size; v < n_nodes; ++v) {
    std::set<int> targets;
    while (targets.size() < m) {
      targets.insert(endpoints[rng.uniform_index(endpoints.size())]);
    }
    for (int t : targets) {
      edges.push_back(Edge::make(t, static_cast<int>(v)));
      endpoints.push_back(t);
      endpoints.push_back(static_cast<int>(v));
    }
  }
  std::sort(edges.begin(), edges.end());
  std::vector<double> w(edges.size(), 1.0);
  return Graph::from_edges(nd::Matrix(n_nodes, feature_dim, 1.0), edges, w);
}

Graph attach_motif(const Graph& base, MotifKind kind, Rng& rng) {
  const std::size_t nb = base.num_nodes();
  if (nb < 1) throw ContractError("attach_motif: base graph has no nodes");
  const std::size_t n = nb + 5;
  const std::size_t d = base.feature_dim();

  nd::Matrix features(n, d);
  for (std::size_t i = 0; i < nb; ++i) std::copy_n(base.features().row(i), d, features.row(i));
  for (std::size_t i = nb; i < n; ++i) std::fill_n(features.row(i), d, 1.0);

  std::vector<Edge> edges = base.edges();
  std::vector<double> weights = base.edge_weights();
  std::vector<Edge> gt;
  const int off = static_cast<int>(nb);
  for (Edge e : motif_edges(kind)) {
    const Edge shifted{e.u + off, e.v + off};
    edges.push_back(shifted);
    weights.push_back(1.0);
    gt.push_back(shifted);
  }
  const int anchor = static_cast<int>(rng.uniform_index(nb));
  const int motif_node = off + static_cast<int>(rng.uniform_index(5));
  edges.push_back(Edge::make(anchor, motif_node));
  weights.push_back(1.0);

  const int label = kind == MotifKind::kHouse ? 0 : 1;
  return Graph::from_edges(std::move(features), edges, weights, label, std::move(gt));
}

Dataset generate_ba2motifs(std::size_t n_graphs, Rng& rng) {
  if (n_graphs < 2) throw ParameterError("generate_ba2motifs: n_graphs must be >= 2");
  if (n_graphs % 2 != 0) {
    throw ParameterError("generate_ba2motifs: odd n_graphs (" + std::to_string(n_graphs) +
                         "); classes must be balanced");
  }
  Dataset ds;
  ds.seed = rng.seed();
  ds.provenance = "ba2motifs n_graphs=" + std::to_string(n_graphs) +
                  " base_nodes=" + std::to_string(kBa2MotifsBaseNodes) +
                  " edges_per_new_node=1 feature_dim=" + std::to_string(kBa2MotifsFeatureDim);
  const std::size_t half = n_graphs / 2;
  ds.graphs.reserve(n_graphs);
  for (std::size_t i = 0; i < n_graphs; ++i) {
    Rng local = rng.split(i);
    Graph base = ba_base(kBa2MotifsBaseNodes, 1, local);
    ds.graphs.push_back(
        attach_motif(base, i < half ? MotifKind::kHouse : MotifKind::kFiveCycle, local));
  }

  // Stratified split: shuffle each class, then cut 80/10/10.
  ds.splits.assign(n_graphs, Split::kTrain);
  Rng split_rng = rng.split(n_graphs);
  for (std::size_t cls = 0; cls < 2; ++cls) {
    std::vector<std::size_t> idx(half);
    for (std::size_t k = 0; k < half; ++k) idx[k] = cls * half + k;
    for (std::size_t k = half; k > 1; --k) {
      std::swap(idx[k - 1], idx[split_rng.uniform_index(k)]);
    }
    const auto n_train = static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(half)));
    const auto n_val = std::min(half - n_train,
                                static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(half))));
    for (std::size_t k = 0; k < half; ++k) {
      ds.splits[idx[k]] = k < n_train ? Split::kTrain
                          : k < n_train + n_val ? Split::kVal
                                                : Split::kTest;
    }
  }
  return ds;
}

}  // namespace storex
