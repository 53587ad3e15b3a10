#pragma once

#include "stgd/core/graph.hpp"

#include <Eigen/Dense>

#include <limits>
#include <random>
#include <vector>

// Brute-force references for graph statistics, written without BFS so they
// share no code path with the library.
namespace stgd::testing {

using IntMatrix = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>;

inline IntMatrix binary(const Matrix& a) {
  IntMatrix b(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) b(i, j) = (i != j && a(i, j) > 0.5) ? 1 : 0;
  }
  return b;
}

/// Random symmetric 0/1 snapshot with edge probability p.
inline Snapshot random_snapshot(int n, double p, std::mt19937_64& rng) {
  std::bernoulli_distribution edge(p);
  Snapshot s;
  s.coords = Matrix::Zero(n, 2);
  s.node_features = Matrix::Zero(n, 2);
  s.adjacency = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) s.adjacency(i, j) = s.adjacency(j, i) = edge(rng) ? 1.0 : 0.0;
  }
  return s;
}

/// Edge count over pair count as an exact integer ratio.
inline std::pair<long long, long long> density_ratio(const Matrix& a) {
  const IntMatrix b = binary(a);
  const long long n = b.rows();
  return {b.sum() / 2, n * (n - 1) / 2};
}

/// Mean local clustering from the diagonal of A^3 (closed walks of length 3).
inline double clustering_oracle(const Matrix& a) {
  const IntMatrix b = binary(a);
  const IntMatrix cube = b * b * b;
  const Eigen::Index n = b.rows();
  double total = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const long long k = b.row(i).sum();
    if (k >= 2) total += static_cast<double>(cube(i, i)) / static_cast<double>(k * (k - 1));
  }
  return n ? total / static_cast<double>(n) : 0.0;
}

/// Betweenness from Floyd-Warshall distances and path counts sigma_st = (A^d)_st.
inline std::vector<double> betweenness_oracle(const Matrix& a) {
  const IntMatrix b = binary(a);
  const Eigen::Index n = b.rows();
  const long long inf = std::numeric_limits<int>::max();
  IntMatrix dist(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) dist(i, j) = i == j ? 0 : (b(i, j) ? 1 : inf);
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        if (dist(i, k) < inf && dist(k, j) < inf) dist(i, j) = std::min(dist(i, j), dist(i, k) + dist(k, j));
      }
    }
  }
  std::vector<IntMatrix> powers{IntMatrix::Identity(n, n)};
  for (Eigen::Index d = 1; d < n; ++d) powers.push_back(powers.back() * b);
  auto sigma = [&](Eigen::Index s, Eigen::Index t) { return powers[dist(s, t)](s, t); };

  std::vector<double> cb(n, 0.0);
  if (n < 3) return cb;
  for (Eigen::Index v = 0; v < n; ++v) {
    for (Eigen::Index s = 0; s < n; ++s) {
      for (Eigen::Index t = s + 1; t < n; ++t) {
        if (s == v || t == v || dist(s, t) >= inf || dist(s, v) >= inf || dist(v, t) >= inf) continue;
        if (dist(s, v) + dist(v, t) != dist(s, t)) continue;
        cb[v] += static_cast<double>(sigma(s, v) * sigma(v, t)) / static_cast<double>(sigma(s, t));
      }
    }
    cb[v] /= static_cast<double>((n - 1) * (n - 2)) / 2.0;
  }
  return cb;
}

}  // namespace stgd::testing
