#include "stgd/core/statistics.hpp"

#include "stgd/core/errors.hpp"

#include <cmath>
#include <deque>

namespace stgd {

std::vector<std::vector<int>> neighbor_lists(const Matrix& adjacency) {
  const int n = static_cast<int>(adjacency.rows());
  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && adjacency(i, j) > kEdgeThreshold) adj[i].push_back(j);
    }
  }
  return adj;
}

double graph_density(const Snapshot& s) {
  const auto n = static_cast<long>(s.num_nodes());
  if (n < 2) throw UndefinedInputError("graph_density requires at least 2 nodes");
  long edges = 0;
  for (long i = 0; i < n; ++i) {
    for (long j = i + 1; j < n; ++j) edges += s.adjacency(i, j) > kEdgeThreshold ? 1 : 0;
  }
  return static_cast<double>(edges) / (static_cast<double>(n * (n - 1)) / 2.0);
}

double clustering_coefficient(const Snapshot& s) {
  const int n = static_cast<int>(s.num_nodes());
  if (n == 0) return 0.0;
  const auto adj = neighbor_lists(s.adjacency);
  double total = 0.0;
  for (int v = 0; v < n; ++v) {
    const auto& nb = adj[v];
    const auto k = static_cast<long>(nb.size());
    if (k < 2) continue;
    long links = 0;
    for (std::size_t a = 0; a < nb.size(); ++a) {
      for (std::size_t b = a + 1; b < nb.size(); ++b) {
        links += s.adjacency(nb[a], nb[b]) > kEdgeThreshold ? 1 : 0;
      }
    }
    total += static_cast<double>(2 * links) / static_cast<double>(k * (k - 1));
  }
  return total / n;
}

std::vector<double> betweenness_centrality(const Snapshot& s) {
  const int n = static_cast<int>(s.num_nodes());
  std::vector<double> cb(n, 0.0);
  if (n < 3) return cb;
  const auto adj = neighbor_lists(s.adjacency);

  // Brandes: single-source BFS, then dependency accumulation in reverse BFS order.
  std::vector<int> order;
  std::vector<std::vector<int>> pred(n);
  std::vector<double> sigma(n), delta(n);
  std::vector<int> dist(n);
  for (int src = 0; src < n; ++src) {
    order.clear();
    for (int v = 0; v < n; ++v) pred[v].clear();
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(dist.begin(), dist.end(), -1);
    sigma[src] = 1.0;
    dist[src] = 0;
    std::deque<int> queue{src};
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      order.push_back(v);
      for (int w : adj[v]) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          queue.push_back(w);
        }
        if (dist[w] == dist[v] + 1) {
          sigma[w] += sigma[v];
          pred[w].push_back(v);
        }
      }
    }
    std::fill(delta.begin(), delta.end(), 0.0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const int w = *it;
      for (int v : pred[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      if (w != src) cb[w] += delta[w];
    }
  }
  // Each unordered pair was visited from both endpoints.
  const double pairs = static_cast<double>(n - 1) * static_cast<double>(n - 2) / 2.0;
  for (double& v : cb) v = v / 2.0 / pairs;
  return cb;
}

double temporal_correlation(const SpatiotemporalGraph& g) {
  const std::size_t steps = g.length();
  if (steps < 2) throw UndefinedInputError("temporal_correlation requires T >= 2");
  const int n = static_cast<int>(g.num_nodes());
  if (n == 0) return 0.0;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    double node_sum = 0.0;
    for (std::size_t t = 0; t + 1 < steps; ++t) {
      const auto& a = g.snapshots[t].adjacency;
      const auto& b = g.snapshots[t + 1].adjacency;
      double common = 0.0, deg_a = 0.0, deg_b = 0.0;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        const double x = a(i, j) > kEdgeThreshold ? 1.0 : 0.0;
        const double y = b(i, j) > kEdgeThreshold ? 1.0 : 0.0;
        common += x * y;
        deg_a += x;
        deg_b += y;
      }
      if (deg_a > 0.0 && deg_b > 0.0) node_sum += common / std::sqrt(deg_a * deg_b);
    }
    total += node_sum / static_cast<double>(steps - 1);
  }
  return total / n;
}

}  // namespace stgd
