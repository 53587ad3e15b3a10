#pragma once

#include "stgd/nn/autograd.hpp"
#include "stgd/nn/parameters.hpp"

#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace stgd::model {

using nn::Parameter;
using nn::ParameterStore;
using nn::Tape;
using nn::Var;

/// Per-batch graph constants shared by the graph layers. Rows are grouped
/// by snapshot: (groups * nodes).
struct GraphContext {
  Eigen::Index nodes = 0;
  std::shared_ptr<const std::vector<Matrix>> adjacency;
  /// D^-1/2 (A + I) D^-1/2 with D the degree matrix of A + I.
  std::shared_ptr<const std::vector<Matrix>> gcn_adjacency;
  /// sum_j A_ij * ||c_i - c_j||, (groups*nodes) x 1.
  Matrix distance_sum;
  /// sum_j A_ij, (groups*nodes) x 1.
  Matrix degree;

  std::size_t groups() const { return adjacency ? adjacency->size() : 0; }

  static GraphContext build(std::span<const Matrix> adjacency, std::span<const Matrix> coords);
};

Matrix gcn_normalize(const Matrix& adjacency);

/// Affine map x W + b.
class Linear {
 public:
  Linear() = default;
  Linear(ParameterStore& store, const std::string& name, Eigen::Index in, Eigen::Index out,
         double gain, std::mt19937_64& rng, bool bias = true);

  Var operator()(Var x) const;
  Eigen::Index in() const { return weight_->value.rows(); }
  Eigen::Index out() const { return weight_->value.cols(); }

 private:
  Parameter* weight_ = nullptr;
  Parameter* bias_ = nullptr;
};

/// Same-length 1-D convolution along the node axis.
class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(ParameterStore& store, const std::string& name, Eigen::Index in_channels,
         Eigen::Index out_channels, int kernel, std::mt19937_64& rng);

  Var operator()(Var x, Eigen::Index nodes) const;

 private:
  Parameter* weight_ = nullptr;
  Parameter* bias_ = nullptr;
  int kernel_ = 5;
};

/// Same-size 2-D convolution over the n x n edge grid.
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(ParameterStore& store, const std::string& name, Eigen::Index in_channels,
         Eigen::Index out_channels, int kernel, std::mt19937_64& rng);

  Var operator()(Var x, Eigen::Index n) const;

 private:
  Parameter* weight_ = nullptr;
  Parameter* bias_ = nullptr;
  int kernel_ = 5;
};

/// ReLU(D^-1/2 (A+I) D^-1/2 H W + b).
class GcnLayer {
 public:
  GcnLayer() = default;
  GcnLayer(ParameterStore& store, const std::string& name, Eigen::Index in, Eigen::Index out,
           std::mt19937_64& rng);

  Var operator()(Var h, const GraphContext& ctx) const;

 private:
  Parameter* weight_ = nullptr;
  Parameter* bias_ = nullptr;
};

/// Spatial-network message passing:
///   m_i  = 1/(N-1) * sum_j A_ij * phi([h_j ; d_ij]),   d_ij = ||c_i - c_j||
///   h_i' = ReLU(psi([h_i ; m_i]))
/// with affine phi, psi of the layer width. Because phi is affine the
/// aggregation factors into A (H W_h) + (sum_j A_ij d_ij) w_d + deg_i b.
class SmpnnLayer {
 public:
  SmpnnLayer() = default;
  SmpnnLayer(ParameterStore& store, const std::string& name, Eigen::Index in, Eigen::Index width,
             std::mt19937_64& rng);

  Var operator()(Var h, const GraphContext& ctx) const;

 private:
  Parameter* phi_h_ = nullptr;
  Parameter* phi_d_ = nullptr;
  Parameter* phi_b_ = nullptr;
  Parameter* psi_h_ = nullptr;
  Parameter* psi_m_ = nullptr;
  Parameter* psi_b_ = nullptr;
};

/// edge[i][j] = ReLU(U h_i + U h_j + b); symmetric by construction.
class NodeToEdge {
 public:
  NodeToEdge() = default;
  NodeToEdge(ParameterStore& store, const std::string& name, Eigen::Index in, Eigen::Index out,
             std::mt19937_64& rng);

  Var operator()(Var node_hidden, Eigen::Index nodes) const;

 private:
  Parameter* weight_ = nullptr;
  Parameter* bias_ = nullptr;
};

}  // namespace stgd::model
