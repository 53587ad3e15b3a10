#pragma once

// Reverse-mode automatic differentiation over row-major double matrices.
//
// Every tensor in the model is a 2-D matrix. Higher-rank data is laid out in
// rows: node tensors are (groups * nodes) x channels, edge grids are
// (groups * nodes * nodes) x channels. Ops that need the grouping take it as
// an argument.

#include "stgd/core/graph.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace stgd::nn {

using stgd::Matrix;

/// Trainable matrix. `grad` accumulates across backward passes until cleared.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
};

struct Node {
  Matrix value;
  Matrix grad;
  bool requires_grad = false;
  Parameter* param = nullptr;
  std::function<void()> backward;
};

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Node* node, Tape* tape) : node_(node), tape_(tape) {}

  const Matrix& value() const { return node_->value; }
  const Matrix& grad() const { return node_->grad; }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  double scalar() const { return node_->value(0, 0); }
  bool requires_grad() const { return node_->requires_grad; }
  Node* node() const { return node_; }
  Tape& tape() const { return *tape_; }
  explicit operator bool() const { return node_ != nullptr; }

 private:
  Node* node_ = nullptr;
  Tape* tape_ = nullptr;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Non-differentiable input.
  Var constant(Matrix value);
  /// Differentiable input; its gradient is readable after backward().
  Var leaf(Matrix value);
  /// Parameter input. Repeated calls for one Parameter return the same node.
  /// backward() adds the node gradient into Parameter::grad.
  Var param(Parameter& p);

  /// Records an op. `inputs` decide whether the result needs a gradient;
  /// `make_backward` is only invoked when it does.
  template <class MakeBackward>
  Var record(Matrix value, std::initializer_list<Var> inputs, MakeBackward&& make_backward) {
    Node& n = push(std::move(value));
    for (const Var& v : inputs) n.requires_grad = n.requires_grad || v.requires_grad();
    if (n.requires_grad) n.backward = make_backward(&n);
    return Var(&n, this);
  }
  Var record_any(Matrix value, std::span<const Var> inputs,
                 const std::function<std::function<void()>(Node*)>& make_backward);

  /// Seeds d(loss)/d(loss) = 1 for a 1x1 loss and propagates in reverse
  /// recording order.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  Node& push(Matrix value);

  std::vector<std::unique_ptr<Node>> nodes_;
  std::unordered_map<Parameter*, Node*> params_;
};

/// Adds `g` into the gradient of `n` (no-op for nodes without gradient).
template <class Expr>
void accumulate(Node* n, const Eigen::MatrixBase<Expr>& g) {
  if (!n->requires_grad) return;
  if (n->grad.size() == 0) {
    n->grad = g;
  } else {
    n->grad += g;
  }
}

/// Multiply-accumulate count of executed forward ops on this thread.
std::uint64_t& mac_counter();

// ---- elementwise / linear algebra -------------------------------------------
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double s);
/// a (R x C) + row (1 x C) broadcast over rows.
Var add_row(Var a, Var row);
Var relu(Var a);
/// 1x1 sum of all entries.
Var sum_all(Var a);

// ---- shape -------------------------------------------------------------------
/// Row-major reinterpretation.
Var reshape(Var a, Eigen::Index rows, Eigen::Index cols);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
Var gather_rows(Var a, std::vector<Eigen::Index> rows);
/// Mean of each consecutive block of `group` rows.
Var group_mean(Var a, Eigen::Index group);
/// Sum of each consecutive block of `group` rows.
Var group_sum(Var a, Eigen::Index group);
/// Each row repeated `times` times consecutively.
Var repeat_rows(Var a, Eigen::Index times);

// ---- graph / grid ops -------------------------------------------------------
/// Zero-padded "same" 1-D convolution along the node axis of x
/// ((groups*nodes) x Cin). weight is (kernel*Cin) x Cout, bias 1 x Cout.
Var conv1d(Var x, Var weight, Var bias, Eigen::Index nodes, int kernel);
/// Zero-padded "same" 2-D convolution over an n x n grid per group.
/// x is (groups*n*n) x Cin, weight (kernel*kernel*Cin) x Cout.
Var conv2d(Var x, Var weight, Var bias, Eigen::Index n, int kernel);
/// out_g = blocks[g] * x_g for node blocks of size n (blocks are constants).
Var block_matmul(std::shared_ptr<const std::vector<Matrix>> blocks, Var x);
/// (groups*n) x h -> (groups*n*n) x h with out[g,i,j] = u[g,i] + u[g,j].
Var pair_sum(Var u, Eigen::Index n);
/// Per n x n block of a column: averages with the transpose and sets the
/// diagonal to -infinity.
Var symmetrize_mask(Var x, Eigen::Index n);

// ---- probabilistic ops ------------------------------------------------------
/// mean + exp(0.5 * log_var) * noise.
Var reparameterize(Var mean, Var log_var, const Matrix& noise);
/// Per-row KL(N(qm, exp(qlv)) || N(pm, exp(plv))) for diagonal Gaussians; R x 1.
Var gaussian_kl_rows(Var q_mean, Var q_log_var, Var p_mean, Var p_log_var);
/// Per-row KL to the standard normal; R x 1.
Var standard_kl_rows(Var mean, Var log_var);
/// Per-snapshot Bernoulli NLL of `targets` under sigmoid(logits) over the
/// strict upper triangle; logits and targets are (groups*n*n) x 1.
Var bernoulli_nll_upper(Var logits, const Matrix& targets, Eigen::Index n);
/// Per-row weight * sum_c (pred - target)^2; R x 1.
Var squared_error_rows(Var pred, const Matrix& target, double weight);

}  // namespace stgd::nn
