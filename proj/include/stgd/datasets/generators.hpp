#pragma once

#include "stgd/core/graph.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <random>

namespace stgd::data {

/// Closed integer interval [lo, hi].
struct IntRange {
  int lo = 0;
  int hi = 0;

  bool contains(double v) const { return v >= lo && v <= hi; }
  bool operator==(const IntRange&) const = default;
};

/// Parameters shared by both synthetic generators.
///
/// Nodes are placed uniformly in the square with corners (p, p) and
/// (p + n*s, p + n*s); node color ~ N(b, color_std) and node size =
/// base_size * time_profile[t], with time_profile[t] = slope * (t+1) / T.
struct SequenceParams {
  int n_nodes = 25;
  int seq_len = 8;
  int coord_dim = 2;
  IntRange position_range{1, 11};  // factor p
  IntRange density_range{4, 11};   // factor s
  IntRange color_range{1, 11};     // factor b
  IntRange time_slope_range{1, 5};
  double color_std = 1.0;
  double base_size = 1.0;

  /// Raw-to-normalized frame covering every square the ranges allow.
  CoordinateFrame frame() const;
};

struct WaxmanParams : SequenceParams {
  double beta = 0.4;
  double alpha = 0.1;
};

struct RggParams : SequenceParams {
  double theta = 12.0;
};

/// beta * exp(-d / (alpha * max_distance)).
double waxman_edge_probability(double distance, double max_distance, double beta, double alpha);

/// Edge iff distance < theta.
inline bool rgg_edge(double distance, double theta) { return distance < theta; }

/// One Bernoulli draw of the Waxman edge rule.
bool draw_waxman_edge(double distance, double max_distance, const WaxmanParams& params,
                      std::mt19937_64& rng);

/// Linear size ramp slope * (t+1) / T.
std::vector<double> linear_time_profile(double slope, int seq_len);

/// Throws DataError when a factor lies outside the configured ranges.
void check_factors(const SequenceParams& params, const FactorRecord& factors);

/// Factor values drawn uniformly from the integer ranges.
FactorRecord sample_factors(const SequenceParams& params, std::mt19937_64& rng);

SpatiotemporalGraph generate_waxman_sequence(const WaxmanParams& params,
                                             const FactorRecord& factors, std::uint64_t seed);
SpatiotemporalGraph generate_rgg_sequence(const RggParams& params, const FactorRecord& factors,
                                          std::uint64_t seed);

/// Raw (un-normalized) generator coordinates of a sequence.
Matrix raw_coords(const Snapshot& s, const CoordinateFrame& frame);

nlohmann::json to_json(const WaxmanParams& p);
nlohmann::json to_json(const RggParams& p);
WaxmanParams waxman_params_from_json(const nlohmann::json& j);
RggParams rgg_params_from_json(const nlohmann::json& j);

/// splitmix64 finalizer; used to derive independent per-item seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace stgd::data
