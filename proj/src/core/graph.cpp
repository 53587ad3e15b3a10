#include "stgd/core/graph.hpp"

#include <cmath>
#include <sstream>

namespace stgd {

bool Snapshot::operator==(const Snapshot& o) const {
  auto same = [](const Matrix& a, const Matrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
  };
  return same(coords, o.coords) && same(adjacency, o.adjacency) &&
         same(node_features, o.node_features);
}

namespace {

ValidationReport fail(std::size_t index, std::string field, std::string message) {
  ValidationReport r;
  r.ok = false;
  r.snapshot = index;
  r.field = std::move(field);
  r.message = std::move(message);
  return r;
}

std::string at(Eigen::Index i, Eigen::Index j) {
  std::ostringstream os;
  os << "(" << i << "," << j << ")";
  return os.str();
}

}  // namespace

ValidationReport validate_snapshot(const Snapshot& s, std::size_t index) {
  const Eigen::Index n = s.adjacency.rows();
  if (s.adjacency.cols() != n) {
    return fail(index, "adjacency", "adjacency is not square at snapshot " + std::to_string(index));
  }
  if (s.coords.rows() != n) {
    return fail(index, "coords", "coords row count differs from node count at snapshot " +
                                     std::to_string(index));
  }
  if (s.node_features.rows() != n) {
    return fail(index, "node_features",
                "node_features row count differs from node count at snapshot " +
                    std::to_string(index));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double a = s.adjacency(i, j);
      if (!std::isfinite(a)) return fail(index, "adjacency", "non-finite adjacency at " + at(i, j));
      if (a < 0.0 || a > 1.0) {
        return fail(index, "adjacency", "adjacency outside [0,1] at " + at(i, j));
      }
      if (i == j && a != 0.0) return fail(index, "adjacency", "diagonal nonzero at " + at(i, j));
      if (j > i && a != s.adjacency(j, i)) {
        return fail(index, "adjacency", "asymmetric at " + at(i, j));
      }
    }
  }
  if (!s.coords.allFinite()) return fail(index, "coords", "non-finite coords");
  if (!s.node_features.allFinite()) return fail(index, "node_features", "non-finite node_features");
  return {};
}

ValidationReport validate_graph(const SpatiotemporalGraph& g) {
  if (g.snapshots.empty()) return fail(0, "snapshots", "sequence has no snapshots (T must be >= 1)");
  const auto& first = g.snapshots.front();
  for (std::size_t t = 0; t < g.snapshots.size(); ++t) {
    const auto& s = g.snapshots[t];
    if (s.adjacency.rows() != first.adjacency.rows()) {
      return fail(t, "adjacency", "node-count mismatch at snapshot " + std::to_string(t));
    }
    if (s.coords.cols() != first.coords.cols()) {
      return fail(t, "coords", "coordinate-dimension mismatch at snapshot " + std::to_string(t));
    }
    if (s.node_features.cols() != first.node_features.cols()) {
      return fail(t, "node_features", "feature-dimension mismatch at snapshot " + std::to_string(t));
    }
    if (auto r = validate_snapshot(s, t); !r) return r;
  }
  if (g.factors) {
    const auto& f = *g.factors;
    if (f.time_profile.size() != g.snapshots.size()) {
      return fail(0, "factors", "time_profile length differs from sequence length");
    }
    bool finite = std::isfinite(f.graph_factor_b) && std::isfinite(f.spatial_factor_p) &&
                  std::isfinite(f.joint_factor_s) && std::isfinite(f.time_slope);
    for (double v : f.time_profile) finite = finite && std::isfinite(v);
    if (!finite) return fail(0, "factors", "non-finite factor value");
  }
  return {};
}

}  // namespace stgd
