#include "stgd/datasets/generators.hpp"

#include "stgd/core/errors.hpp"

#include <cmath>
#include <functional>

namespace stgd::data {

CoordinateFrame SequenceParams::frame() const {
  const double lo = position_range.lo;
  const double hi = position_range.hi + static_cast<double>(n_nodes) * density_range.hi;
  return {lo, hi - lo};
}

double waxman_edge_probability(double distance, double max_distance, double beta, double alpha) {
  return beta * std::exp(-distance / (alpha * max_distance));
}

bool draw_waxman_edge(double distance, double max_distance, const WaxmanParams& params,
                      std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return u(rng) < waxman_edge_probability(distance, max_distance, params.beta, params.alpha);
}

std::vector<double> linear_time_profile(double slope, int seq_len) {
  std::vector<double> p(seq_len);
  for (int t = 0; t < seq_len; ++t) p[t] = slope * (t + 1) / seq_len;
  return p;
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void check_factors(const SequenceParams& params, const FactorRecord& f) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw DataError(std::string("factor outside configured range: ") + what);
  };
  require(params.position_range.contains(f.spatial_factor_p), "p");
  require(params.density_range.contains(f.joint_factor_s), "s");
  require(params.color_range.contains(f.graph_factor_b), "b");
  require(params.time_slope_range.contains(f.time_slope), "time slope");
  if (static_cast<int>(f.time_profile.size()) != params.seq_len) {
    throw DataError("time_profile length differs from seq_len");
  }
}

FactorRecord sample_factors(const SequenceParams& params, std::mt19937_64& rng) {
  auto draw = [&rng](IntRange r) {
    return static_cast<double>(std::uniform_int_distribution<int>(r.lo, r.hi)(rng));
  };
  FactorRecord f;
  f.spatial_factor_p = draw(params.position_range);
  f.joint_factor_s = draw(params.density_range);
  f.graph_factor_b = draw(params.color_range);
  f.time_slope = draw(params.time_slope_range);
  f.time_profile = linear_time_profile(f.time_slope, params.seq_len);
  return f;
}

Matrix raw_coords(const Snapshot& s, const CoordinateFrame& frame) {
  return (s.coords.array() * frame.extent + frame.origin).matrix();
}

namespace {

void check_common(const SequenceParams& p) {
  if (p.n_nodes < 1 || p.seq_len < 1 || p.coord_dim < 1) {
    throw ConfigError("n_nodes, seq_len and coord_dim must be positive");
  }
  for (IntRange r : {p.position_range, p.density_range, p.color_range, p.time_slope_range}) {
    if (r.lo > r.hi) throw ConfigError("empty factor range");
  }
}

using EdgeRule = std::function<bool(double distance, double max_distance, std::mt19937_64&)>;

SpatiotemporalGraph generate(const SequenceParams& params, const FactorRecord& factors,
                             std::uint64_t seed, const EdgeRule& edge) {
  check_common(params);
  check_factors(params, factors);
  std::mt19937_64 rng(seed);
  const int n = params.n_nodes;
  const int dim = params.coord_dim;
  const double side = n * factors.joint_factor_s;
  std::uniform_real_distribution<double> place(factors.spatial_factor_p,
                                               factors.spatial_factor_p + side);

  Matrix raw(n, dim);
  Matrix dist(n, n);
  double max_distance = 0.0;
  constexpr int kMaxAttempts = 10;
  for (int attempt = 0; attempt < kMaxAttempts && max_distance <= 0.0; ++attempt) {
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < dim; ++c) raw(i, c) = place(rng);
    }
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        dist(i, j) = (raw.row(i) - raw.row(j)).norm();
        max_distance = std::max(max_distance, dist(i, j));
      }
    }
  }
  if (max_distance <= 0.0) {
    throw DataError("degenerate coordinates: all nodes coincide after 10 attempts");
  }

  Matrix adjacency = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (edge(dist(i, j), max_distance, rng)) adjacency(i, j) = adjacency(j, i) = 1.0;
    }
  }
  std::normal_distribution<double> color(factors.graph_factor_b, params.color_std);
  Vector colors(n);
  for (int i = 0; i < n; ++i) colors(i) = color(rng);

  const CoordinateFrame frame = params.frame();
  const Matrix coords = ((raw.array() - frame.origin) / frame.extent).matrix();
  SpatiotemporalGraph g;
  g.snapshots.reserve(params.seq_len);
  for (int t = 0; t < params.seq_len; ++t) {
    Snapshot s;
    s.coords = coords;
    s.adjacency = adjacency;
    s.node_features.resize(n, 2);
    s.node_features.col(0) = colors;
    s.node_features.col(1).setConstant(params.base_size * factors.time_profile[t]);
    g.snapshots.push_back(std::move(s));
  }
  g.factors = factors;
  g.frame = frame;
  return g;
}

nlohmann::json common_json(const SequenceParams& p) {
  auto range = [](IntRange r) { return nlohmann::json::array({r.lo, r.hi}); };
  return {{"n_nodes", p.n_nodes},
          {"seq_len", p.seq_len},
          {"coord_dim", p.coord_dim},
          {"position_range", range(p.position_range)},
          {"density_range", range(p.density_range)},
          {"color_range", range(p.color_range)},
          {"time_slope_range", range(p.time_slope_range)},
          {"color_std", p.color_std},
          {"base_size", p.base_size}};
}

void common_from_json(const nlohmann::json& j, SequenceParams& p) {
  auto range = [&j](const char* key, IntRange& r) {
    if (j.contains(key)) r = {j.at(key).at(0).get<int>(), j.at(key).at(1).get<int>()};
  };
  p.n_nodes = j.value("n_nodes", p.n_nodes);
  p.seq_len = j.value("seq_len", p.seq_len);
  p.coord_dim = j.value("coord_dim", p.coord_dim);
  range("position_range", p.position_range);
  range("density_range", p.density_range);
  range("color_range", p.color_range);
  range("time_slope_range", p.time_slope_range);
  p.color_std = j.value("color_std", p.color_std);
  p.base_size = j.value("base_size", p.base_size);
}

}  // namespace

SpatiotemporalGraph generate_waxman_sequence(const WaxmanParams& params,
                                             const FactorRecord& factors, std::uint64_t seed) {
  if (!(params.beta > 0.0 && params.beta <= 1.0)) throw ConfigError("waxman beta must lie in (0,1]");
  if (!(params.alpha > 0.0)) throw ConfigError("waxman alpha must be positive");
  return generate(params, factors, seed,
                  [&params](double d, double max_d, std::mt19937_64& rng) {
                    return draw_waxman_edge(d, max_d, params, rng);
                  });
}

SpatiotemporalGraph generate_rgg_sequence(const RggParams& params, const FactorRecord& factors,
                                          std::uint64_t seed) {
  if (!(params.theta > 0.0)) throw ConfigError("rgg theta must be positive");
  return generate(params, factors, seed, [&params](double d, double, std::mt19937_64&) {
    return rgg_edge(d, params.theta);
  });
}

nlohmann::json to_json(const WaxmanParams& p) {
  auto j = common_json(p);
  j["beta"] = p.beta;
  j["alpha"] = p.alpha;
  return j;
}

nlohmann::json to_json(const RggParams& p) {
  auto j = common_json(p);
  j["theta"] = p.theta;
  return j;
}

WaxmanParams waxman_params_from_json(const nlohmann::json& j) {
  WaxmanParams p;
  common_from_json(j, p);
  p.beta = j.value("beta", p.beta);
  p.alpha = j.value("alpha", p.alpha);
  return p;
}

RggParams rgg_params_from_json(const nlohmann::json& j) {
  RggParams p;
  common_from_json(j, p);
  p.theta = j.value("theta", p.theta);
  return p;
}

}  // namespace stgd::data
