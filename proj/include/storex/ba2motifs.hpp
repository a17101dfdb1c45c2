#pragma once

#include <cstddef>

#include "storex/graph.hpp"
#include "storex/rng.hpp"

namespace storex {

inline constexpr std::size_t kBa2MotifsFeatureDim = 10;
inline constexpr std::size_t kBa2MotifsBaseNodes = 20;

/// Preferential-attachment graph grown from a clique of max(2, m) nodes;
/// every later node attaches to m distinct existing nodes with probability
/// proportional to degree. Features are all-ones rows of `feature_dim`.
Graph ba_base(std::size_t n_nodes, std::size_t edges_per_new_node, Rng& rng,
              std::size_t feature_dim = kBa2MotifsFeatureDim);

/// Appends a 5-node motif and one edge between a uniform base node and a
/// uniform motif node. Ground truth is the motif's internal edges; label is 0
/// for a house and 1 for a five-cycle.
Graph attach_motif(const Graph& base, MotifKind kind, Rng& rng);

/// Class-balanced BA-2motifs set (n_graphs must be even) with a stratified
/// 80/10/10 train/val/test split.
Dataset generate_ba2motifs(std::size_t n_graphs, Rng& rng);

}  // namespace storex
