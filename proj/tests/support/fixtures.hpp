#pragma once

#include "stgd/datasets/dataset.hpp"
#include "stgd/model/model.hpp"

#include <vector>

namespace stgd::testing {

inline SpatiotemporalGraph small_sequence(int nodes, int steps, std::uint64_t seed) {
  data::WaxmanParams p;
  p.n_nodes = nodes;
  p.seq_len = steps;
  p.beta = 0.9;
  p.alpha = 0.4;
  return data::generate_sequence(p, seed);
}

/// Small-dimension model for fast checks.
inline model::ModelConfig tiny_config(int nodes, model::Variant variant, std::uint64_t seed = 3) {
  model::ModelConfig c;
  c.nodes = nodes;
  c.variant = variant;
  c.fs_dim = 4;
  c.fg_dim = 3;
  c.fsg_dim = 5;
  c.z_dim = 6;
  c.node_channels = 3;
  c.edge_channels = 2;
  c.init_seed = seed;
  return c;
}

/// Relabels node i as perm[i] in every snapshot.
inline SpatiotemporalGraph permute_nodes(const SpatiotemporalGraph& g,
                                         const std::vector<int>& perm) {
  SpatiotemporalGraph out = g;
  for (std::size_t t = 0; t < g.snapshots.size(); ++t) {
    const Snapshot& s = g.snapshots[t];
    Snapshot& o = out.snapshots[t];
    const auto n = static_cast<int>(perm.size());
    for (int i = 0; i < n; ++i) {
      o.coords.row(perm[i]) = s.coords.row(i);
      o.node_features.row(perm[i]) = s.node_features.row(i);
      for (int j = 0; j < n; ++j) o.adjacency(perm[i], perm[j]) = s.adjacency(i, j);
    }
  }
  return out;
}

}  // namespace stgd::testing
