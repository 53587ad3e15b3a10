#pragma once

#include "stgd/model/layers.hpp"

namespace stgd::model {

/// Decoder outputs for one snapshot, as values.
struct DecodedSnapshot {
  Matrix edge_logits;    // N x N, symmetric, diagonal = -inf
  Matrix node_features;  // N x M
  Matrix coords;         // N x D
};

struct DecoderShape {
  Eigen::Index nodes = 25;
  Eigen::Index coord_dim = 2;
  Eigen::Index feature_dim = 2;
  /// Per-node channels of the initial FC map (FC width = nodes * channels).
  Eigen::Index node_channels = 20;
  /// Channels of the node-to-edge deconvolution output.
  Eigen::Index edge_channels = 8;
  int kernel = 5;
};

/// p(S_t | z_t, f_s, f_sg): FC, per-node reshape, conv1D 50/20/10, per-node FC to D.
class SpatialDecoder {
 public:
  SpatialDecoder() = default;
  SpatialDecoder(ParameterStore& store, Eigen::Index input_dim, const DecoderShape& shape,
                 std::mt19937_64& rng);

  /// input: R x input_dim -> coords (R*N) x D.
  Var operator()(Var input) const;

 private:
  DecoderShape shape_;
  Linear fc_;
  Conv1d conv1_, conv2_, conv3_;
  Linear out_;
};

struct GraphDecoderOutput {
  Var edge_logits;    // (R*N*N) x 1
  Var node_features;  // (R*N) x M
};

/// p(G_t | z_t, f_g, f_sg).
///   edge branch: FC, per-node reshape, conv1D 50, node-to-edge deconv,
///                5x5 edge-grid conv 20, per-edge FC 1, symmetrize + mask
///   node branch: FC, per-node reshape, conv1D 50, conv1D 20, per-node FC M
class GraphDecoder {
 public:
  GraphDecoder() = default;
  GraphDecoder(ParameterStore& store, Eigen::Index input_dim, const DecoderShape& shape,
               std::mt19937_64& rng);

  GraphDecoderOutput operator()(Var input) const;

 private:
  DecoderShape shape_;
  Linear edge_fc_;
  Conv1d edge_conv_;
  NodeToEdge node_to_edge_;
  Conv2d edge_grid_;
  Linear edge_out_;
  Linear node_fc_;
  Conv1d node_conv1_, node_conv2_;
  Linear node_out_;
};

}  // namespace stgd::model
