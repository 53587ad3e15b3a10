#pragma once

#include "stgd/model/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace stgd::eval {

enum class LatentGroup { FS, FG, FSG, Z };

std::string to_string(LatentGroup g);
LatentGroup parse_group(const std::string& name);

/// 11 evenly spaced points from -5 to 5.
std::vector<double> default_traversal_values();

/// Posterior means of `base` with coordinate `dim` of `group` set to each value
/// (at every step for z). Throws ConfigError when `dim` is out of range.
std::vector<model::LatentSample> traversal_latents(const model::StgdVae& model,
                                                   const SpatiotemporalGraph& base,
                                                   LatentGroup group, int dim,
                                                   const std::vector<double>& values);

/// Decoded traversal; adjacency holds edge probabilities.
std::vector<SpatiotemporalGraph> latent_traversal(const model::StgdVae& model,
                                                  const SpatiotemporalGraph& base,
                                                  LatentGroup group, int dim,
                                                  const std::vector<double>& values);

/// Draws latents from the model prior: N(0, I) for every group, with one z
/// draw copied to all steps (dep instead chains through its transition prior).
model::LatentSample sample_prior(const model::StgdVae& model, int steps, std::mt19937_64& rng);

/// Decodes prior draws into binary graphs. One uniform per node pair is shared
/// by all steps, so each step's edge is Bernoulli in its own probability while
/// stable probabilities yield stable edges.
std::vector<SpatiotemporalGraph> generate_from_prior(const model::StgdVae& model, int count,
                                                     int steps, std::uint64_t seed);

}  // namespace stgd::eval
