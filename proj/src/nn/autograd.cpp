#include "stgd/nn/autograd.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

namespace stgd::nn {

std::uint64_t& mac_counter() {
  thread_local std::uint64_t count = 0;
  return count;
}

namespace {

void count_macs(std::uint64_t n) { mac_counter() += n; }

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

Node& Tape::push(Matrix value) {
  nodes_.push_back(std::make_unique<Node>());
  nodes_.back()->value = std::move(value);
  return *nodes_.back();
}

Var Tape::constant(Matrix value) { return Var(&push(std::move(value)), this); }

Var Tape::leaf(Matrix value) {
  Node& n = push(std::move(value));
  n.requires_grad = true;
  return Var(&n, this);
}

Var Tape::param(Parameter& p) {
  if (auto it = params_.find(&p); it != params_.end()) return Var(it->second, this);
  Node& n = push(p.value);
  n.requires_grad = true;
  n.param = &p;
  params_.emplace(&p, &n);
  return Var(&n, this);
}

Var Tape::record_any(Matrix value, std::span<const Var> inputs,
                     const std::function<std::function<void()>(Node*)>& make_backward) {
  Node& n = push(std::move(value));
  for (const Var& v : inputs) n.requires_grad = n.requires_grad || v.requires_grad();
  if (n.requires_grad) n.backward = make_backward(&n);
  return Var(&n, this);
}

void Tape::backward(Var loss) {
  require(loss.rows() == 1 && loss.cols() == 1, "backward() needs a 1x1 loss");
  Node* root = loss.node();
  if (!root->requires_grad) return;
  root->grad = Matrix::Ones(1, 1);
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node& n = **it;
    if (n.requires_grad && n.backward && n.grad.size() != 0) n.backward();
  }
  for (auto& n : nodes_) {
    if (n->param == nullptr || n->grad.size() == 0) continue;
    Parameter& p = *n->param;
    if (p.grad.size() == 0) {
      p.grad = n->grad;
    } else {
      p.grad += n->grad;
    }
  }
}

// ---- elementwise / linear algebra -------------------------------------------

Var matmul(Var a, Var b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions differ");
  count_macs(static_cast<std::uint64_t>(a.rows() * a.cols() * b.cols()));
  Matrix out = a.value() * b.value();
  return a.tape().record(std::move(out), {a, b}, [a, b](Node* self) {
    return [a, b, self] {
      if (a.requires_grad()) accumulate(a.node(), self->grad * b.value().transpose());
      if (b.requires_grad()) accumulate(b.node(), a.value().transpose() * self->grad);
    };
  });
}

Var add(Var a, Var b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add: shape mismatch");
  return a.tape().record(a.value() + b.value(), {a, b}, [a, b](Node* self) {
    return [a, b, self] {
      accumulate(a.node(), self->grad);
      accumulate(b.node(), self->grad);
    };
  });
}

Var sub(Var a, Var b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "sub: shape mismatch");
  return a.tape().record(a.value() - b.value(), {a, b}, [a, b](Node* self) {
    return [a, b, self] {
      accumulate(a.node(), self->grad);
      accumulate(b.node(), -self->grad);
    };
  });
}

Var scale(Var a, double s) {
  return a.tape().record(a.value() * s, {a}, [a, s](Node* self) {
    return [a, s, self] { accumulate(a.node(), self->grad * s); };
  });
}

Var add_row(Var a, Var row) {
  require(row.rows() == 1 && row.cols() == a.cols(), "add_row: row shape mismatch");
  Matrix out = a.value();
  out.rowwise() += row.value().row(0);
  return a.tape().record(std::move(out), {a, row}, [a, row](Node* self) {
    return [a, row, self] {
      accumulate(a.node(), self->grad);
      if (row.requires_grad()) accumulate(row.node(), self->grad.colwise().sum());
    };
  });
}

Var relu(Var a) {
  Matrix out = a.value().cwiseMax(0.0);
  return a.tape().record(std::move(out), {a}, [a](Node* self) {
    return [a, self] {
      accumulate(a.node(), (a.value().array() > 0.0).select(self->grad, 0.0).matrix());
    };
  });
}

Var sum_all(Var a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape().record(std::move(out), {a}, [a](Node* self) {
    return [a, self] {
      accumulate(a.node(), Matrix::Constant(a.rows(), a.cols(), self->grad(0, 0)));
    };
  });
}

// ---- shape -------------------------------------------------------------------

Var reshape(Var a, Eigen::Index rows, Eigen::Index cols) {
  require(rows * cols == a.value().size(), "reshape: size mismatch");
  Matrix out = Eigen::Map<const Matrix>(a.value().data(), rows, cols);
  return a.tape().record(std::move(out), {a}, [a](Node* self) {
    return [a, self] {
      accumulate(a.node(), Eigen::Map<const Matrix>(self->grad.data(), a.rows(), a.cols()));
    };
  });
}

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols: no inputs");
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    require(p.rows() == rows, "concat_cols: row count mismatch");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Eigen::Index off = 0;
  for (const Var& p : parts) {
    out.middleCols(off, p.cols()) = p.value();
    off += p.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts[0].tape().record_any(std::move(out), parts, [inputs](Node* self) {
    return [inputs, self] {
      Eigen::Index o = 0;
      for (const Var& p : inputs) {
        if (p.requires_grad()) accumulate(p.node(), self->grad.middleCols(o, p.cols()));
        o += p.cols();
      }
    };
  });
}

Var concat_rows(std::span<const Var> parts) {
  require(!parts.empty(), "concat_rows: no inputs");
  const Eigen::Index cols = parts[0].cols();
  Eigen::Index rows = 0;
  for (const Var& p : parts) {
    require(p.cols() == cols, "concat_rows: column count mismatch");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Eigen::Index off = 0;
  for (const Var& p : parts) {
    out.middleRows(off, p.rows()) = p.value();
    off += p.rows();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts[0].tape().record_any(std::move(out), parts, [inputs](Node* self) {
    return [inputs, self] {
      Eigen::Index o = 0;
      for (const Var& p : inputs) {
        if (p.requires_grad()) accumulate(p.node(), self->grad.middleRows(o, p.rows()));
        o += p.rows();
      }
    };
  });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  require(start >= 0 && count >= 0 && start + count <= a.cols(), "slice_cols: out of range");
  Matrix out = a.value().middleCols(start, count);
  return a.tape().record(std::move(out), {a}, [a, start, count](Node* self) {
    return [a, start, count, self] {
      Matrix g = Matrix::Zero(a.rows(), a.cols());
      g.middleCols(start, count) = self->grad;
      accumulate(a.node(), g);
    };
  });
}

Var gather_rows(Var a, std::vector<Eigen::Index> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), a.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require(rows[r] >= 0 && rows[r] < a.rows(), "gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(r)) = a.value().row(rows[r]);
  }
  return a.tape().record(std::move(out), {a}, [a, rows = std::move(rows)](Node* self) {
    return [a, rows, self] {
      Matrix g = Matrix::Zero(a.rows(), a.cols());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        g.row(rows[r]) += self->grad.row(static_cast<Eigen::Index>(r));
      }
      accumulate(a.node(), g);
    };
  });
}

Var group_sum(Var a, Eigen::Index group) {
  require(group > 0 && a.rows() % group == 0, "group_sum: rows not divisible by group");
  const Eigen::Index out_rows = a.rows() / group;
  Matrix out = Matrix::Zero(out_rows, a.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r) out.row(r / group) += a.value().row(r);
  return a.tape().record(std::move(out), {a}, [a, group](Node* self) {
    return [a, group, self] {
      Matrix g(a.rows(), a.cols());
      for (Eigen::Index r = 0; r < a.rows(); ++r) g.row(r) = self->grad.row(r / group);
      accumulate(a.node(), g);
    };
  });
}

Var group_mean(Var a, Eigen::Index group) { return scale(group_sum(a, group), 1.0 / group); }

Var repeat_rows(Var a, Eigen::Index times) {
  require(times > 0, "repeat_rows: times must be positive");
  Matrix out(a.rows() * times, a.cols());
  for (Eigen::Index r = 0; r < out.rows(); ++r) out.row(r) = a.value().row(r / times);
  return a.tape().record(std::move(out), {a}, [a, times](Node* self) {
    return [a, times, self] {
      Matrix g = Matrix::Zero(a.rows(), a.cols());
      for (Eigen::Index r = 0; r < self->grad.rows(); ++r) g.row(r / times) += self->grad.row(r);
      accumulate(a.node(), g);
    };
  });
}

// ---- graph / grid ops -------------------------------------------------------

namespace {

// Column block layout: row (g, i) holds x(g, i + o - pad) for o in [0, kernel).
Matrix im2col_1d(const Matrix& x, Eigen::Index nodes, int kernel) {
  const Eigen::Index cin = x.cols();
  const Eigen::Index groups = x.rows() / nodes;
  const int pad = (kernel - 1) / 2;
  Matrix cols = Matrix::Zero(x.rows(), kernel * cin);
  for (Eigen::Index g = 0; g < groups; ++g) {
    for (Eigen::Index i = 0; i < nodes; ++i) {
      for (int o = 0; o < kernel; ++o) {
        const Eigen::Index src = i + o - pad;
        if (src < 0 || src >= nodes) continue;
        cols.block(g * nodes + i, o * cin, 1, cin) = x.row(g * nodes + src);
      }
    }
  }
  return cols;
}

Matrix im2col_2d_group(const Matrix& x, Eigen::Index base, Eigen::Index n, int kernel) {
  const Eigen::Index cin = x.cols();
  const int pad = (kernel - 1) / 2;
  const Eigen::Index width = static_cast<Eigen::Index>(kernel) * kernel * cin;
  Matrix cols = Matrix::Zero(n * n, width);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      double* dst = cols.data() + (i * n + j) * width;
      for (int dy = 0; dy < kernel; ++dy) {
        const Eigen::Index si = i + dy - pad;
        if (si < 0 || si >= n) continue;
        for (int dx = 0; dx < kernel; ++dx) {
          const Eigen::Index sj = j + dx - pad;
          if (sj < 0 || sj >= n) continue;
          const double* src = x.data() + (base + si * n + sj) * cin;
          std::copy(src, src + cin, dst + (dy * kernel + dx) * cin);
        }
      }
    }
  }
  return cols;
}

}  // namespace

Var conv1d(Var x, Var weight, Var bias, Eigen::Index nodes, int kernel) {
  require(kernel % 2 == 1, "conv1d: kernel must be odd");
  require(x.rows() % nodes == 0, "conv1d: rows not divisible by node count");
  require(weight.rows() == kernel * x.cols(), "conv1d: weight rows must equal kernel*Cin");
  require(bias.rows() == 1 && bias.cols() == weight.cols(), "conv1d: bias shape mismatch");
  auto cols = std::make_shared<const Matrix>(im2col_1d(x.value(), nodes, kernel));
  count_macs(static_cast<std::uint64_t>(cols->rows() * cols->cols() * weight.cols()));
  Matrix out = *cols * weight.value();
  out.rowwise() += bias.value().row(0);
  auto& tape = x.tape();
  std::array<Var, 3> ins{x, weight, bias};
  return tape.record_any(std::move(out), ins, [=](Node* self) {
    return [=] {
      const Matrix& g = self->grad;
      if (weight.requires_grad()) accumulate(weight.node(), cols->transpose() * g);
      if (bias.requires_grad()) accumulate(bias.node(), g.colwise().sum());
      if (!x.requires_grad()) return;
      const Matrix dcols = g * weight.value().transpose();
      const Eigen::Index cin = x.cols();
      const Eigen::Index groups = x.rows() / nodes;
      const int pad = (kernel - 1) / 2;
      Matrix dx = Matrix::Zero(x.rows(), cin);
      for (Eigen::Index gi = 0; gi < groups; ++gi) {
        for (Eigen::Index i = 0; i < nodes; ++i) {
          for (int o = 0; o < kernel; ++o) {
            const Eigen::Index src = i + o - pad;
            if (src < 0 || src >= nodes) continue;
            dx.row(gi * nodes + src) += dcols.block(gi * nodes + i, o * cin, 1, cin);
          }
        }
      }
      accumulate(x.node(), dx);
    };
  });
}

Var conv2d(Var x, Var weight, Var bias, Eigen::Index n, int kernel) {
  require(kernel % 2 == 1, "conv2d: kernel must be odd");
  require(x.rows() % (n * n) == 0, "conv2d: rows not divisible by n*n");
  require(weight.rows() == kernel * kernel * x.cols(), "conv2d: weight rows must equal k*k*Cin");
  require(bias.rows() == 1 && bias.cols() == weight.cols(), "conv2d: bias shape mismatch");
  const Eigen::Index groups = x.rows() / (n * n);
  const Eigen::Index cout = weight.cols();
  Matrix out(x.rows(), cout);
  for (Eigen::Index g = 0; g < groups; ++g) {
    const Matrix c = im2col_2d_group(x.value(), g * n * n, n, kernel);
    out.middleRows(g * n * n, n * n).noalias() = c * weight.value();
    count_macs(static_cast<std::uint64_t>(c.rows() * c.cols() * cout));
  }
  out.rowwise() += bias.value().row(0);
  std::array<Var, 3> ins{x, weight, bias};
  return x.tape().record_any(std::move(out), ins, [=](Node* self) {
    return [=] {
      const Matrix& gr = self->grad;
      if (bias.requires_grad()) accumulate(bias.node(), gr.colwise().sum());
      const Eigen::Index cin = x.cols();
      if (weight.requires_grad()) {
        Matrix dw = Matrix::Zero(weight.rows(), weight.cols());
        for (Eigen::Index g = 0; g < groups; ++g) {
          dw.noalias() += im2col_2d_group(x.value(), g * n * n, n, kernel).transpose() *
                          gr.middleRows(g * n * n, n * n);
        }
        accumulate(weight.node(), dw);
      }
      if (x.requires_grad()) {
        const int pad = (kernel - 1) / 2;
        const Eigen::Index width = static_cast<Eigen::Index>(kernel) * kernel * cin;
        Matrix dx = Matrix::Zero(x.rows(), cin);
        for (Eigen::Index g = 0; g < groups; ++g) {
          const Matrix dcols = gr.middleRows(g * n * n, n * n) * weight.value().transpose();
          for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
              const double* src = dcols.data() + (i * n + j) * width;
              for (int dy = 0; dy < kernel; ++dy) {
                const Eigen::Index si = i + dy - pad;
                if (si < 0 || si >= n) continue;
                for (int dxo = 0; dxo < kernel; ++dxo) {
                  const Eigen::Index sj = j + dxo - pad;
                  if (sj < 0 || sj >= n) continue;
                  double* dst = dx.data() + (g * n * n + si * n + sj) * cin;
                  const double* part = src + (dy * kernel + dxo) * cin;
                  for (Eigen::Index c = 0; c < cin; ++c) dst[c] += part[c];
                }
              }
            }
          }
        }
        accumulate(x.node(), dx);
      }
    };
  });
}

Var block_matmul(std::shared_ptr<const std::vector<Matrix>> blocks, Var x) {
  require(blocks && !blocks->empty(), "block_matmul: no blocks");
  const Eigen::Index n = (*blocks)[0].rows();
  require(x.rows() == n * static_cast<Eigen::Index>(blocks->size()),
          "block_matmul: rows must equal blocks * n");
  Matrix out(x.rows(), x.cols());
  for (std::size_t g = 0; g < blocks->size(); ++g) {
    const auto off = static_cast<Eigen::Index>(g) * n;
    out.middleRows(off, n).noalias() = (*blocks)[g] * x.value().middleRows(off, n);
  }
  count_macs(static_cast<std::uint64_t>(blocks->size() * n * n * x.cols()));
  return x.tape().record(std::move(out), {x}, [x, blocks, n](Node* self) {
    return [x, blocks, n, self] {
      Matrix g(x.rows(), x.cols());
      for (std::size_t b = 0; b < blocks->size(); ++b) {
        const auto off = static_cast<Eigen::Index>(b) * n;
        g.middleRows(off, n).noalias() = (*blocks)[b].transpose() * self->grad.middleRows(off, n);
      }
      accumulate(x.node(), g);
    };
  });
}

Var pair_sum(Var u, Eigen::Index n) {
  require(u.rows() % n == 0, "pair_sum: rows not divisible by n");
  const Eigen::Index groups = u.rows() / n;
  Matrix out(groups * n * n, u.cols());
  for (Eigen::Index g = 0; g < groups; ++g) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        out.row((g * n + i) * n + j) = u.value().row(g * n + i) + u.value().row(g * n + j);
      }
    }
  }
  return u.tape().record(std::move(out), {u}, [u, n, groups](Node* self) {
    return [u, n, groups, self] {
      Matrix g = Matrix::Zero(u.rows(), u.cols());
      for (Eigen::Index b = 0; b < groups; ++b) {
        for (Eigen::Index i = 0; i < n; ++i) {
          for (Eigen::Index j = 0; j < n; ++j) {
            const auto row = self->grad.row((b * n + i) * n + j);
            g.row(b * n + i) += row;
            g.row(b * n + j) += row;
          }
        }
      }
      accumulate(u.node(), g);
    };
  });
}

Var symmetrize_mask(Var x, Eigen::Index n) {
  require(x.cols() == 1 && x.rows() % (n * n) == 0, "symmetrize_mask: expects (groups*n*n) x 1");
  const Eigen::Index groups = x.rows() / (n * n);
  Matrix out(x.rows(), 1);
  const auto& v = x.value();
  for (Eigen::Index g = 0; g < groups; ++g) {
    const Eigen::Index base = g * n * n;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        out(base + i * n + j) = i == j ? -std::numeric_limits<double>::infinity()
                                       : 0.5 * (v(base + i * n + j) + v(base + j * n + i));
      }
    }
  }
  return x.tape().record(std::move(out), {x}, [x, n, groups](Node* self) {
    return [x, n, groups, self] {
      Matrix g = Matrix::Zero(x.rows(), 1);
      for (Eigen::Index b = 0; b < groups; ++b) {
        const Eigen::Index base = b * n * n;
        for (Eigen::Index i = 0; i < n; ++i) {
          for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) continue;
            g(base + i * n + j) =
                0.5 * (self->grad(base + i * n + j) + self->grad(base + j * n + i));
          }
        }
      }
      accumulate(x.node(), g);
    };
  });
}

// ---- probabilistic ops ------------------------------------------------------

Var reparameterize(Var mean, Var log_var, const Matrix& noise) {
  require(mean.rows() == log_var.rows() && mean.cols() == log_var.cols() &&
              noise.rows() == mean.rows() && noise.cols() == mean.cols(),
          "reparameterize: shape mismatch");
  const Matrix std_dev = (0.5 * log_var.value().array()).exp().matrix();
  Matrix out = mean.value() + std_dev.cwiseProduct(noise);
  return mean.tape().record(std::move(out), {mean, log_var},
                            [mean, log_var, noise, std_dev](Node* self) {
                              return [=] {
                                accumulate(mean.node(), self->grad);
                                accumulate(log_var.node(),
                                           (0.5 * self->grad.array() * noise.array() *
                                            std_dev.array())
                                               .matrix());
                              };
                            });
}

Var gaussian_kl_rows(Var q_mean, Var q_log_var, Var p_mean, Var p_log_var) {
  const auto rows = q_mean.rows();
  const auto cols = q_mean.cols();
  for (const Var& v : {q_log_var, p_mean, p_log_var}) {
    require(v.rows() == rows && v.cols() == cols, "gaussian_kl_rows: shape mismatch");
  }
  const auto diff = (q_mean.value() - p_mean.value()).array();
  const Matrix inv_p = (-p_log_var.value().array()).exp().matrix();
  const Matrix q_var = q_log_var.value().array().exp().matrix();
  const Matrix terms = ((p_log_var.value().array() - q_log_var.value().array()) +
                        (q_var.array() + diff.square()) * inv_p.array() - 1.0)
                           .matrix();
  Matrix out = 0.5 * terms.rowwise().sum();
  const Matrix d = diff.matrix();
  std::array<Var, 4> ins{q_mean, q_log_var, p_mean, p_log_var};
  return q_mean.tape().record_any(std::move(out), ins, [=](Node* self) {
    return [=] {
      // Row gradient broadcast over latent dimensions.
      const Eigen::ArrayXXd g = self->grad.col(0).replicate(1, cols).array();
      if (q_mean.requires_grad()) {
        accumulate(q_mean.node(), (g * d.array() * inv_p.array()).matrix());
      }
      if (q_log_var.requires_grad()) {
        accumulate(q_log_var.node(), (g * 0.5 * (q_var.array() * inv_p.array() - 1.0)).matrix());
      }
      if (p_mean.requires_grad()) {
        accumulate(p_mean.node(), (-g * d.array() * inv_p.array()).matrix());
      }
      if (p_log_var.requires_grad()) {
        accumulate(p_log_var.node(),
                   (g * 0.5 * (1.0 - (q_var.array() + d.array().square()) * inv_p.array()))
                       .matrix());
      }
    };
  });
}

Var standard_kl_rows(Var mean, Var log_var) {
  auto& tape = mean.tape();
  const Var zeros = tape.constant(Matrix::Zero(mean.rows(), mean.cols()));
  return gaussian_kl_rows(mean, log_var, zeros, zeros);
}

Var bernoulli_nll_upper(Var logits, const Matrix& targets, Eigen::Index n) {
  require(logits.cols() == 1 && logits.rows() % (n * n) == 0 && targets.rows() == logits.rows() &&
              targets.cols() == 1,
          "bernoulli_nll_upper: expects matching (groups*n*n) x 1 inputs");
  const Eigen::Index groups = logits.rows() / (n * n);
  Matrix out = Matrix::Zero(groups, 1);
  const auto& l = logits.value();
  for (Eigen::Index g = 0; g < groups; ++g) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const Eigen::Index k = g * n * n + i * n + j;
        const double x = l(k);
        s += std::max(x, 0.0) - x * targets(k) + std::log1p(std::exp(-std::abs(x)));
      }
    }
    out(g) = s;
  }
  return logits.tape().record(std::move(out), {logits}, [logits, targets, n, groups](Node* self) {
    return [=] {
      Matrix grad = Matrix::Zero(logits.rows(), 1);
      const auto& l = logits.value();
      for (Eigen::Index g = 0; g < groups; ++g) {
        for (Eigen::Index i = 0; i < n; ++i) {
          for (Eigen::Index j = i + 1; j < n; ++j) {
            const Eigen::Index k = g * n * n + i * n + j;
            const double sig = 1.0 / (1.0 + std::exp(-l(k)));
            grad(k) = (sig - targets(k)) * self->grad(g);
          }
        }
      }
      accumulate(logits.node(), grad);
    };
  });
}

Var squared_error_rows(Var pred, const Matrix& target, double weight) {
  require(pred.rows() == target.rows() && pred.cols() == target.cols(),
          "squared_error_rows: shape mismatch");
  Matrix diff = pred.value() - target;
  Matrix out = weight * diff.array().square().rowwise().sum().matrix();
  return pred.tape().record(std::move(out), {pred}, [pred, diff = std::move(diff), weight](Node* self) {
    return [=] {
      accumulate(pred.node(), (2.0 * weight * diff.array() *
                               self->grad.col(0).replicate(1, diff.cols()).array())
                                  .matrix());
    };
  });
}

}  // namespace stgd::nn
