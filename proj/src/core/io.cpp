#include "stgd/core/io.hpp"

#include "stgd/core/errors.hpp"

namespace stgd {

namespace {

using ojson = nlohmann::ordered_json;

ojson rows_to_json(const Matrix& m) {
  ojson out = ojson::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ojson row = ojson::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

struct Reader {
  std::size_t stream_size;

  [[noreturn]] void structural(const std::string& what) const {
    throw ParseError("malformed graph record: " + what, stream_size);
  }

  std::size_t header(const nlohmann::json& j, const char* key) const {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number_unsigned()) structural(std::string("missing header field ") + key);
    return it->get<std::size_t>();
  }

  Matrix matrix(const nlohmann::json& block, std::size_t rows, std::size_t cols,
                const std::string& name) const {
    if (!block.is_array() || block.size() != rows) {
      throw ShapeError(name + ": expected " + std::to_string(rows) + " rows");
    }
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
      const auto& row = block[i];
      if (!row.is_array() || row.size() != cols) {
        throw ShapeError(name + ": expected " + std::to_string(cols) + " columns in row " +
                         std::to_string(i));
      }
      for (std::size_t c = 0; c < cols; ++c) {
        if (!row[c].is_number()) structural(name + ": non-numeric entry");
        m(i, c) = row[c].get<double>();
      }
    }
    return m;
  }

  const nlohmann::json& per_step(const nlohmann::json& j, const char* key, std::size_t steps) const {
    auto it = j.find(key);
    if (it == j.end()) structural(std::string("missing array ") + key);
    if (!it->is_array() || it->size() != steps) {
      throw ShapeError(std::string(key) + ": expected " + std::to_string(steps) + " snapshots");
    }
    return *it;
  }
};

void check_expected(const char* name, std::size_t actual, const std::optional<std::size_t>& want) {
  if (want && *want != actual) {
    throw ShapeError(std::string("shape mismatch: stream has ") + name + "=" +
                     std::to_string(actual) + " but configuration expects " + name + "=" +
                     std::to_string(*want));
  }
}

}  // namespace

ojson graph_to_json(const SpatiotemporalGraph& g) {
  ojson j;
  j["version"] = kGraphFormatVersion;
  j["N"] = g.num_nodes();
  j["D"] = g.coord_dim();
  j["M"] = g.feature_dim();
  j["T"] = g.length();
  j["K"] = 1;
  ojson coords = ojson::array(), adjacency = ojson::array(), features = ojson::array();
  for (const auto& s : g.snapshots) {
    coords.push_back(rows_to_json(s.coords));
    adjacency.push_back(rows_to_json(s.adjacency));
    features.push_back(rows_to_json(s.node_features));
  }
  j["coords"] = std::move(coords);
  j["adjacency"] = std::move(adjacency);
  j["node_features"] = std::move(features);
  if (g.factors) {
    const auto& f = *g.factors;
    j["factors"] = {{"b", f.graph_factor_b},
                    {"p", f.spatial_factor_p},
                    {"s", f.joint_factor_s},
                    {"time_slope", f.time_slope},
                    {"time_profile", f.time_profile}};
  }
  if (g.frame) j["frame"] = {{"origin", g.frame->origin}, {"extent", g.frame->extent}};
  return j;
}

std::string serialize_graph(const SpatiotemporalGraph& g) { return graph_to_json(g).dump(); }

SpatiotemporalGraph graph_from_json(const nlohmann::json& j, const ShapeSpec& expected,
                                    std::size_t stream_size) {
  Reader rd{stream_size};
  if (!j.is_object()) rd.structural("record is not a JSON object");
  const auto version = rd.header(j, "version");
  if (version != static_cast<std::size_t>(kGraphFormatVersion)) {
    rd.structural("unsupported format version " + std::to_string(version));
  }
  const auto n = rd.header(j, "N");
  const auto d = rd.header(j, "D");
  const auto m = rd.header(j, "M");
  const auto steps = rd.header(j, "T");
  if (rd.header(j, "K") != 1) throw ShapeError("only scalar edge features (K=1) are supported");
  check_expected("N", n, expected.nodes);
  check_expected("D", d, expected.coord_dim);
  check_expected("M", m, expected.feature_dim);
  check_expected("T", steps, expected.length);

  const auto& coords = rd.per_step(j, "coords", steps);
  const auto& adjacency = rd.per_step(j, "adjacency", steps);
  const auto& features = rd.per_step(j, "node_features", steps);
  SpatiotemporalGraph g;
  g.snapshots.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    Snapshot s;
    s.coords = rd.matrix(coords[t], n, d, "coords");
    s.adjacency = rd.matrix(adjacency[t], n, n, "adjacency");
    s.node_features = rd.matrix(features[t], n, m, "node_features");
    g.snapshots.push_back(std::move(s));
  }
  if (auto it = j.find("factors"); it != j.end()) {
    try {
      FactorRecord f;
      f.graph_factor_b = it->at("b").get<double>();
      f.spatial_factor_p = it->at("p").get<double>();
      f.joint_factor_s = it->at("s").get<double>();
      f.time_slope = it->at("time_slope").get<double>();
      f.time_profile = it->at("time_profile").get<std::vector<double>>();
      g.factors = std::move(f);
    } catch (const nlohmann::json::exception& e) {
      rd.structural(std::string("bad factor record: ") + e.what());
    }
  }
  if (auto it = j.find("frame"); it != j.end()) {
    try {
      g.frame = CoordinateFrame{it->at("origin").get<double>(), it->at("extent").get<double>()};
    } catch (const nlohmann::json::exception& e) {
      rd.structural(std::string("bad frame: ") + e.what());
    }
  }
  return g;
}

SpatiotemporalGraph deserialize_graph(std::string_view text, const ShapeSpec& expected) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed graph stream: ") + e.what(), e.byte);
  }
  return graph_from_json(j, expected, text.size());
}

}  // namespace stgd
