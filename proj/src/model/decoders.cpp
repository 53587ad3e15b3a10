#include "stgd/model/decoders.hpp"

#include <cmath>

namespace stgd::model {

namespace {
const double kReluGain = std::sqrt(2.0);

Var per_node(Var fc_out, Eigen::Index nodes) {
  return nn::reshape(fc_out, fc_out.rows() * nodes, fc_out.cols() / nodes);
}
}  // namespace

SpatialDecoder::SpatialDecoder(ParameterStore& store, Eigen::Index input_dim,
                               const DecoderShape& shape, std::mt19937_64& rng)
    : shape_(shape),
      fc_(store, "dec.spatial.fc", input_dim, shape.nodes * shape.node_channels, kReluGain, rng),
      conv1_(store, "dec.spatial.conv1", shape.node_channels, 50, shape.kernel, rng),
      conv2_(store, "dec.spatial.conv2", 50, 20, shape.kernel, rng),
      conv3_(store, "dec.spatial.conv3", 20, 10, shape.kernel, rng),
      out_(store, "dec.spatial.out", 10, shape.coord_dim, 1.0, rng) {}

Var SpatialDecoder::operator()(Var input) const {
  const Eigen::Index n = shape_.nodes;
  Var h = per_node(nn::relu(fc_(input)), n);
  h = nn::relu(conv1_(h, n));
  h = nn::relu(conv2_(h, n));
  h = nn::relu(conv3_(h, n));
  return out_(h);
}

GraphDecoder::GraphDecoder(ParameterStore& store, Eigen::Index input_dim,
                           const DecoderShape& shape, std::mt19937_64& rng)
    : shape_(shape),
      edge_fc_(store, "dec.edge.fc", input_dim, shape.nodes * shape.node_channels, kReluGain, rng),
      edge_conv_(store, "dec.edge.conv", shape.node_channels, 50, shape.kernel, rng),
      node_to_edge_(store, "dec.edge.n2e", 50, shape.edge_channels, rng),
      edge_grid_(store, "dec.edge.grid", shape.edge_channels, 20, shape.kernel, rng),
      edge_out_(store, "dec.edge.out", 20, 1, 1.0, rng),
      node_fc_(store, "dec.node.fc", input_dim, shape.nodes * shape.node_channels, kReluGain, rng),
      node_conv1_(store, "dec.node.conv1", shape.node_channels, 50, shape.kernel, rng),
      node_conv2_(store, "dec.node.conv2", 50, 20, shape.kernel, rng),
      node_out_(store, "dec.node.out", 20, shape.feature_dim, 1.0, rng) {}

GraphDecoderOutput GraphDecoder::operator()(Var input) const {
  const Eigen::Index n = shape_.nodes;
  Var e = per_node(nn::relu(edge_fc_(input)), n);
  e = nn::relu(edge_conv_(e, n));
  e = node_to_edge_(e, n);
  e = nn::relu(edge_grid_(e, n));
  Var logits = nn::symmetrize_mask(edge_out_(e), n);

  Var v = per_node(nn::relu(node_fc_(input)), n);
  v = nn::relu(node_conv1_(v, n));
  v = nn::relu(node_conv2_(v, n));
  return {logits, node_out_(v)};
}

}  // namespace stgd::model
