#include "storex/graph.hpp"

#include <algorithm>
#include <cmath>

#include "storex/errors.hpp"

namespace storex {

namespace {

std::string edge_str(Edge e) {
  return "(" + std::to_string(e.u) + "," + std::to_string(e.v) + ")";
}

void check_weight(double w) {
  if (!(w >= 0.0 && w <= 1.0)) {
    throw ValidationError("weight out of [0,1]: " + std::to_string(w));
  }
}

}  // namespace

Graph::Graph(nd::Matrix features, nd::Matrix adjacency, int label,
             std::optional<std::vector<Edge>> gt_edges)
    : features_(std::move(features)),
      adjacency_(std::move(adjacency)),
      label_(label),
      gt_edges_(std::move(gt_edges)) {
  const std::size_t n = adjacency_.rows();
  if (adjacency_.cols() != n) {
    throw ValidationError("adjacency must be square, got " + adjacency_.shape_string());
  }
  if (features_.rows() != n) {
    throw ValidationError("features have " + std::to_string(features_.rows()) +
                          " rows for " + std::to_string(n) + " nodes");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (adjacency_(i, i) != 0.0) throw ValidationError("adjacency diagonal must be zero");
    for (std::size_t j = i + 1; j < n; ++j) {
      const double w = adjacency_(i, j);
      if (w != adjacency_(j, i)) throw ValidationError("asymmetric adjacency at " +
                                                       edge_str({int(i), int(j)}));
      check_weight(w);
      if (w > 0.0) edges_.push_back({static_cast<int>(i), static_cast<int>(j)});
    }
  }
  if (gt_edges_) {
    auto& gt = *gt_edges_;
    for (Edge& e : gt) {
      e = Edge::make(e.u, e.v);
      if (e.u < 0 || static_cast<std::size_t>(e.v) >= n || adjacency_(e.u, e.v) == 0.0) {
        throw ValidationError("ground-truth edge " + edge_str(e) + " is not a present edge");
      }
    }
    std::sort(gt.begin(), gt.end());
    gt.erase(std::unique(gt.begin(), gt.end()), gt.end());
  }
}

Graph Graph::from_edges(nd::Matrix features, std::span<const Edge> edges,
                        std::span<const double> weights, int label,
                        std::optional<std::vector<Edge>> gt_edges) {
  if (edges.size() != weights.size()) {
    throw ContractError("from_edges: " + std::to_string(edges.size()) + " edges but " +
                        std::to_string(weights.size()) + " weights");
  }
  const std::size_t n = features.rows();
  nd::Matrix adj(n, n);
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const Edge e = Edge::make(edges[k].u, edges[k].v);
    if (e.u < 0 || static_cast<std::size_t>(e.v) >= n) {
      throw ValidationError("edge " + edge_str(e) + " out of range for " + std::to_string(n) +
                            " nodes");
    }
    if (e.u == e.v) throw ValidationError("self-loop " + edge_str(e));
    check_weight(weights[k]);
    if (adj(e.u, e.v) != 0.0) {
      throw ValidationError(adj(e.u, e.v) == weights[k] ? "duplicate edge " + edge_str(e)
                                                        : "asymmetric adjacency at " + edge_str(e));
    }
    adj(e.u, e.v) = weights[k];
    adj(e.v, e.u) = weights[k];
  }
  return Graph(std::move(features), std::move(adj), label, std::move(gt_edges));
}

std::vector<double> Graph::edge_weights() const {
  std::vector<double> w;
  w.reserve(edges_.size());
  for (Edge e : edges_) w.push_back(adjacency_(e.u, e.v));
  return w;
}

int Graph::edge_index(Edge e) const {
  e = Edge::make(e.u, e.v);
  auto it = std::lower_bound(edges_.begin(), edges_.end(), e);
  if (it == edges_.end() || *it != e) return -1;
  return static_cast<int>(it - edges_.begin());
}

std::vector<int> Graph::gt_indicator() const {
  if (!gt_edges_) throw ContractError("graph has no ground-truth mask");
  std::vector<int> ind(edges_.size(), 0);
  for (Edge e : *gt_edges_) ind[static_cast<std::size_t>(edge_index(e))] = 1;
  return ind;
}

Graph Graph::with_label(int label) const {
  Graph g = *this;
  g.label_ = label;
  return g;
}

Graph Graph::with_features(nd::Matrix features) const {
  return Graph(std::move(features), adjacency_, label_, gt_edges_);
}

Graph Graph::reweighted(std::span<const double> weights) const {
  if (weights.size() != edges_.size()) {
    throw ContractError("reweighted: " + std::to_string(weights.size()) + " weights for " +
                        std::to_string(edges_.size()) + " edges");
  }
  nd::Matrix adj = adjacency_;
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    check_weight(weights[k]);
    adj(edges_[k].u, edges_[k].v) = weights[k];
    adj(edges_[k].v, edges_[k].u) = weights[k];
  }
  // Ground truth only refers to edges that survive.
  std::optional<std::vector<Edge>> gt;
  if (gt_edges_) {
    gt.emplace();
    for (Edge e : *gt_edges_) {
      if (adj(e.u, e.v) > 0.0) gt->push_back(e);
    }
  }
  return Graph(features_, std::move(adj), label_, std::move(gt));
}

Graph apply_edge_weights(const Graph& g, const std::map<Edge, double>& weights) {
  const auto& edges = g.edges();
  if (weights.size() != edges.size()) {
    throw ContractError("apply_edge_weights: " + std::to_string(weights.size()) +
                        " weights for " + std::to_string(edges.size()) + " edges");
  }
  std::vector<double> aligned;
  aligned.reserve(edges.size());
  for (Edge e : edges) {
    auto it = weights.find(e);
    if (it == weights.end()) {
      throw ContractError("apply_edge_weights: missing weight for edge " + edge_str(e));
    }
    aligned.push_back(it->second);
  }
  return g.reweighted(aligned);
}

std::string to_string(Split s) {
  switch (s) {
    case Split::kTrain:
      return "train";
    case Split::kVal:
      return "val";
    case Split::kTest:
      return "test";
  }
  return "?";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  throw ParseError("unknown split tag '" + s + "'");
}

std::vector<std::size_t> Dataset::indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < splits.size(); ++i) {
    if (splits[i] == s) out.push_back(i);
  }
  return out;
}

std::vector<Graph> Dataset::subset(Split s) const {
  std::vector<Graph> out;
  for (std::size_t i : indices(s)) out.push_back(graphs[i]);
  return out;
}

std::vector<Edge> motif_edges(MotifKind kind) {
  switch (kind) {
    case MotifKind::kHouse:
      // square 0-1-2-3 with roof node 4 over the 0-1 side
      return {{0, 1}, {1, 2}, {2, 3}, {0, 3}, {0, 4}, {1, 4}};
    case MotifKind::kFiveCycle:
      return {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {0, 4}};
  }
  return {};
}

}  // namespace storex
