#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace stgd {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Ground-truth semantic factors of one synthetic sequence.
struct FactorRecord {
  double graph_factor_b = 0.0;    // node-color mean
  double spatial_factor_p = 0.0;  // position offset
  double joint_factor_s = 0.0;    // spatial/graph density scale
  double time_slope = 1.0;        // multiplier of the linear size ramp
  std::vector<double> time_profile;  // per-step size multiplier, length T

  bool operator==(const FactorRecord&) const = default;
};

/// Affine map from the raw generator frame to the normalized model frame:
/// normalized = (raw - origin) / extent.
struct CoordinateFrame {
  double origin = 0.0;
  double extent = 1.0;

  bool operator==(const CoordinateFrame&) const = default;
};

/// One time frame: geometry (coords) plus graph (adjacency, node features).
struct Snapshot {
  Matrix coords;         // N x D
  Matrix adjacency;      // N x N, symmetric, zero diagonal, entries in [0,1]
  Matrix node_features;  // N x M

  std::size_t num_nodes() const { return static_cast<std::size_t>(adjacency.rows()); }
  bool operator==(const Snapshot& o) const;
};

struct SpatiotemporalGraph {
  std::vector<Snapshot> snapshots;
  std::optional<FactorRecord> factors;
  std::optional<CoordinateFrame> frame;

  std::size_t length() const { return snapshots.size(); }
  std::size_t num_nodes() const { return snapshots.empty() ? 0 : snapshots.front().num_nodes(); }
  std::size_t coord_dim() const {
    return snapshots.empty() ? 0 : static_cast<std::size_t>(snapshots.front().coords.cols());
  }
  std::size_t feature_dim() const {
    return snapshots.empty() ? 0 : static_cast<std::size_t>(snapshots.front().node_features.cols());
  }
  bool operator==(const SpatiotemporalGraph&) const = default;
};

/// Outcome of validate_graph. On failure, `snapshot` and `field` locate the
/// first violated invariant.
struct ValidationReport {
  bool ok = true;
  std::string message;
  std::optional<std::size_t> snapshot;
  std::string field;

  explicit operator bool() const { return ok; }
};

ValidationReport validate_snapshot(const Snapshot& s, std::size_t index = 0);
ValidationReport validate_graph(const SpatiotemporalGraph& g);

}  // namespace stgd
