#include "stgd/model/layers.hpp"

#include <cmath>

namespace stgd::model {

namespace {
const double kReluGain = std::sqrt(2.0);
}

Matrix gcn_normalize(const Matrix& adjacency) {
  const Eigen::Index n = adjacency.rows();
  Matrix a = adjacency + Matrix::Identity(n, n);
  const Eigen::VectorXd inv_sqrt = a.rowwise().sum().array().rsqrt();
  return inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
}

GraphContext GraphContext::build(std::span<const Matrix> adjacency, std::span<const Matrix> coords) {
  GraphContext ctx;
  ctx.nodes = adjacency.empty() ? 0 : adjacency.front().rows();
  const Eigen::Index n = ctx.nodes;
  auto raw = std::make_shared<std::vector<Matrix>>(adjacency.begin(), adjacency.end());
  auto norm = std::make_shared<std::vector<Matrix>>();
  norm->reserve(adjacency.size());
  const auto rows = static_cast<Eigen::Index>(adjacency.size()) * n;
  ctx.distance_sum = Matrix::Zero(rows, 1);
  ctx.degree = Matrix::Zero(rows, 1);
  for (std::size_t g = 0; g < adjacency.size(); ++g) {
    const Matrix& a = adjacency[g];
    const Matrix& c = coords[g];
    norm->push_back(gcn_normalize(a));
    for (Eigen::Index i = 0; i < n; ++i) {
      double dsum = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (a(i, j) != 0.0) dsum += a(i, j) * (c.row(i) - c.row(j)).norm();
      }
      ctx.distance_sum(static_cast<Eigen::Index>(g) * n + i) = dsum;
      ctx.degree(static_cast<Eigen::Index>(g) * n + i) = a.row(i).sum();
    }
  }
  ctx.adjacency = std::move(raw);
  ctx.gcn_adjacency = std::move(norm);
  return ctx;
}

Linear::Linear(ParameterStore& store, const std::string& name, Eigen::Index in, Eigen::Index out,
               double gain, std::mt19937_64& rng, bool bias) {
  weight_ = &store.add_weight(name + ".weight", in, out, in, gain, rng);
  if (bias) bias_ = &store.add_zeros(name + ".bias", 1, out);
}

Var Linear::operator()(Var x) const {
  auto& tape = x.tape();
  Var y = nn::matmul(x, tape.param(*weight_));
  return bias_ ? nn::add_row(y, tape.param(*bias_)) : y;
}

Conv1d::Conv1d(ParameterStore& store, const std::string& name, Eigen::Index in_channels,
               Eigen::Index out_channels, int kernel, std::mt19937_64& rng)
    : kernel_(kernel) {
  weight_ = &store.add_weight(name + ".weight", kernel * in_channels, out_channels,
                              kernel * in_channels, kReluGain, rng);
  bias_ = &store.add_zeros(name + ".bias", 1, out_channels);
}

Var Conv1d::operator()(Var x, Eigen::Index nodes) const {
  auto& tape = x.tape();
  return nn::conv1d(x, tape.param(*weight_), tape.param(*bias_), nodes, kernel_);
}

Conv2d::Conv2d(ParameterStore& store, const std::string& name, Eigen::Index in_channels,
               Eigen::Index out_channels, int kernel, std::mt19937_64& rng)
    : kernel_(kernel) {
  const Eigen::Index fan_in = static_cast<Eigen::Index>(kernel) * kernel * in_channels;
  weight_ = &store.add_weight(name + ".weight", fan_in, out_channels, fan_in, kReluGain, rng);
  bias_ = &store.add_zeros(name + ".bias", 1, out_channels);
}

Var Conv2d::operator()(Var x, Eigen::Index n) const {
  auto& tape = x.tape();
  return nn::conv2d(x, tape.param(*weight_), tape.param(*bias_), n, kernel_);
}

GcnLayer::GcnLayer(ParameterStore& store, const std::string& name, Eigen::Index in,
                   Eigen::Index out, std::mt19937_64& rng) {
  weight_ = &store.add_weight(name + ".weight", in, out, in, kReluGain, rng);
  bias_ = &store.add_zeros(name + ".bias", 1, out);
}

Var GcnLayer::operator()(Var h, const GraphContext& ctx) const {
  auto& tape = h.tape();
  Var propagated = nn::block_matmul(ctx.gcn_adjacency, h);
  return nn::relu(nn::add_row(nn::matmul(propagated, tape.param(*weight_)), tape.param(*bias_)));
}

SmpnnLayer::SmpnnLayer(ParameterStore& store, const std::string& name, Eigen::Index in,
                       Eigen::Index width, std::mt19937_64& rng) {
  phi_h_ = &store.add_weight(name + ".phi.h", in, width, in + 1, 1.0, rng);
  phi_d_ = &store.add_weight(name + ".phi.d", 1, width, in + 1, 1.0, rng);
  phi_b_ = &store.add_zeros(name + ".phi.bias", 1, width);
  psi_h_ = &store.add_weight(name + ".psi.h", in, width, in + width, kReluGain, rng);
  psi_m_ = &store.add_weight(name + ".psi.m", width, width, in + width, kReluGain, rng);
  psi_b_ = &store.add_zeros(name + ".psi.bias", 1, width);
}

Var SmpnnLayer::operator()(Var h, const GraphContext& ctx) const {
  auto& tape = h.tape();
  Var messages = nn::block_matmul(ctx.adjacency, nn::matmul(h, tape.param(*phi_h_)));
  messages = nn::add(messages, nn::matmul(tape.constant(ctx.distance_sum), tape.param(*phi_d_)));
  messages = nn::add(messages, nn::matmul(tape.constant(ctx.degree), tape.param(*phi_b_)));
  if (ctx.nodes > 1) messages = nn::scale(messages, 1.0 / static_cast<double>(ctx.nodes - 1));
  Var update = nn::add(nn::matmul(h, tape.param(*psi_h_)), nn::matmul(messages, tape.param(*psi_m_)));
  return nn::relu(nn::add_row(update, tape.param(*psi_b_)));
}

NodeToEdge::NodeToEdge(ParameterStore& store, const std::string& name, Eigen::Index in,
                       Eigen::Index out, std::mt19937_64& rng) {
  weight_ = &store.add_weight(name + ".weight", in, out, 2 * in, kReluGain, rng);
  bias_ = &store.add_zeros(name + ".bias", 1, out);
}

Var NodeToEdge::operator()(Var node_hidden, Eigen::Index nodes) const {
  auto& tape = node_hidden.tape();
  Var projected = nn::matmul(node_hidden, tape.param(*weight_));
  return nn::relu(nn::add_row(nn::pair_sum(projected, nodes), tape.param(*bias_)));
}

}  // namespace stgd::model
