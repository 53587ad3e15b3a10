#pragma once

#include "stgd/core/graph.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <string_view>

namespace stgd {

inline constexpr int kGraphFormatVersion = 1;

/// Dimensions a caller expects a stream to carry; unset fields are not checked.
struct ShapeSpec {
  std::optional<std::size_t> nodes;
  std::optional<std::size_t> coord_dim;
  std::optional<std::size_t> feature_dim;
  std::optional<std::size_t> length;
};

/// One-line JSON object: header {version, N, D, M, T, K} then row-major
/// nested arrays coords[T][N][D], adjacency[T][N][N], node_features[T][N][M],
/// and optional "factors" / "frame" objects.
std::string serialize_graph(const SpatiotemporalGraph& g);
nlohmann::ordered_json graph_to_json(const SpatiotemporalGraph& g);

/// Throws ParseError (malformed text or structure) or ShapeError (header
/// disagrees with `expected`, or arrays disagree with the header).
SpatiotemporalGraph deserialize_graph(std::string_view text, const ShapeSpec& expected = {});
SpatiotemporalGraph graph_from_json(const nlohmann::json& j, const ShapeSpec& expected = {},
                                    std::size_t stream_size = 0);

}  // namespace stgd
