#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "storex/ndiff.hpp"

namespace storex {

/// Undirected edge, always stored with u < v.
struct Edge {
  int u = 0;
  int v = 0;

  static Edge make(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }
  auto operator<=>(const Edge&) const = default;
};

inline constexpr int kNoLabel = -1;

// A node-featured graph with a symmetric weighted adjacency. Weights lie in
// [0, 1] and a zero entry means "no edge", so scaling a weight to zero drops
// the edge from edges(). Immutable once constructed.
class Graph {
 public:
  Graph() = default;
  Graph(nd::Matrix features, nd::Matrix adjacency, int label = kNoLabel,
        std::optional<std::vector<Edge>> gt_edges = std::nullopt);

  /// Builds a graph from an edge list (each undirected pair once).
  static Graph from_edges(nd::Matrix features, std::span<const Edge> edges,
                          std::span<const double> weights, int label = kNoLabel,
                          std::optional<std::vector<Edge>> gt_edges = std::nullopt);

  std::size_t num_nodes() const { return adjacency_.rows(); }
  std::size_t num_edges() const { return edges_.size(); }
  std::size_t feature_dim() const { return features_.cols(); }

  const nd::Matrix& features() const { return features_; }
  const nd::Matrix& adjacency() const { return adjacency_; }
  int label() const { return label_; }

  /// Present edges in lexicographic (u, v) order.
  const std::vector<Edge>& edges() const { return edges_; }
  /// Edge weights aligned with edges().
  std::vector<double> edge_weights() const;
  double weight(Edge e) const { return adjacency_(e.u, e.v); }
  /// Position of `e` in edges(), or -1 when absent.
  int edge_index(Edge e) const;

  const std::optional<std::vector<Edge>>& gt_edges() const { return gt_edges_; }
  bool has_gt() const { return gt_edges_.has_value(); }
  /// 1 for ground-truth edges, 0 otherwise; aligned with edges(). Requires has_gt().
  std::vector<int> gt_indicator() const;

  Graph with_label(int label) const;
  Graph with_features(nd::Matrix features) const;
  /// Copy with adjacency entries for edges() replaced by `weights` (aligned with edges()).
  Graph reweighted(std::span<const double> weights) const;

  bool operator==(const Graph& o) const = default;

 private:
  nd::Matrix features_;
  nd::Matrix adjacency_;
  int label_ = kNoLabel;
  std::optional<std::vector<Edge>> gt_edges_;
  std::vector<Edge> edges_;
};

enum class Split { kTrain, kVal, kTest };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct Dataset {
  std::vector<Graph> graphs;
  std::vector<Split> splits;
  std::string provenance;
  uint64_t seed = 0;

  std::size_t size() const { return graphs.size(); }
  std::vector<std::size_t> indices(Split s) const;
  std::vector<Graph> subset(Split s) const;

  bool operator==(const Dataset& o) const = default;
};

enum class MotifKind { kHouse, kFiveCycle };

/// Undirected internal edges of a motif over local node ids 0..4.
std::vector<Edge> motif_edges(MotifKind kind);

/// Sets every present edge to the weight given in `weights`. The key set must
/// equal g.edges() exactly and every value must lie in [0, 1]. `g` is not modified.
Graph apply_edge_weights(const Graph& g, const std::map<Edge, double>& weights);

}  // namespace storex
