#pragma once

#include "stgd/core/graph.hpp"

#include <vector>

// Graph statistics on soft adjacencies. Every statistic binarizes at 0.5
// (an entry counts as an edge iff its weight is strictly greater than 0.5).

namespace stgd {

inline constexpr double kEdgeThreshold = 0.5;

/// Binary adjacency lists of a snapshot after thresholding.
std::vector<std::vector<int>> neighbor_lists(const Matrix& adjacency);

/// Edges / (N(N-1)/2). Throws UndefinedInputError for N < 2.
double graph_density(const Snapshot& s);

/// Mean over all nodes of the local clustering coefficient (0 for degree < 2).
double clustering_coefficient(const Snapshot& s);

/// Shortest-path betweenness per node on the unweighted binarized graph,
/// normalized by the number of unordered pairs (N-1)(N-2)/2 that exclude the node.
std::vector<double> betweenness_centrality(const Snapshot& s);

/// Topological-overlap temporal correlation averaged over steps, then nodes.
/// Throws UndefinedInputError for T < 2.
double temporal_correlation(const SpatiotemporalGraph& g);

}  // namespace stgd
