#pragma once

#include "stgd/core/graph.hpp"
#include "stgd/model/model.hpp"

#include <optional>
#include <vector>

namespace stgd::objective {

using model::DecodedSnapshot;
using model::GaussianParams;
using model::LatentPosterior;

/// Loss components; reconstruction terms are negative log-likelihoods.
struct LossBreakdown {
  double recon_graph = 0;
  double recon_spatial = 0;
  double kl_t = 0;
  double kl_s = 0;
  double kl_g = 0;
  double kl_sg = 0;
  double r1 = 0;
  double r2 = 0;
  double r3 = 0;
  double total = 0;

  LossBreakdown& operator+=(const LossBreakdown& o);
  LossBreakdown& operator*=(double s);
};

struct Betas {
  double b1 = 1.0;  // on kl_t
  double b2 = 1.0;  // on kl_s
  double b3 = 1.0;  // on kl_g
  double b4 = 1.0;  // on kl_sg
};

struct Thresholds {
  double I_t = 1e-5;
  double I_sg = 1e-5;
  /// Fixed capacities of f_s and f_g; folded into the weights b2, b3.
  double I_s = 0.0;
  double I_g = 0.0;
  Betas betas;
};

/// Fixed standard deviations of the Gaussian coordinate / feature likelihoods.
struct LikelihoodScales {
  double coord_sigma = 1.0;
  double feature_sigma = 1.0;
};

/// 0.5 * sum_d (exp(lv) + m^2 - 1 - lv).
double gaussian_kl_to_standard(const GaussianParams& gp);
/// Closed-form KL(q || p) between diagonal Gaussians.
double gaussian_kl_conditional(const GaussianParams& q, const GaussianParams& p);

struct ReconstructionTerms {
  double graph = 0;    // edge Bernoulli NLL + node-feature Gaussian NLL
  double spatial = 0;  // coordinate Gaussian NLL
};

/// Summed over snapshots. Gaussian terms omit the normalizing constant.
ReconstructionTerms reconstruction_loss(const std::vector<DecodedSnapshot>& decoded,
                                        const SpatiotemporalGraph& target,
                                        const LikelihoodScales& scales = {});

/// Fills r1, r2, r3 and total from the reconstruction and KL fields.
void finish_breakdown(LossBreakdown& b, const Thresholds& th);

/// Value-level objective for one sequence. `z_prior` (Dep) holds the
/// conditional prior per step; its first entry is ignored and N(0, I) used.
LossBreakdown total_objective(const LatentPosterior& posterior,
                              const std::vector<DecodedSnapshot>& decoded,
                              const SpatiotemporalGraph& target, const Thresholds& th,
                              const std::optional<std::vector<GaussianParams>>& z_prior = {},
                              const LikelihoodScales& scales = {});

/// Differentiable objective of a forward pass, averaged over the batch.
struct TapeObjective {
  nn::Var loss;  // 1x1 minimization loss
  LossBreakdown values;
};

TapeObjective build_objective(const model::ForwardPass& fp, const model::Batch& batch,
                              const model::ModelConfig& config, const Thresholds& th);

}  // namespace stgd::objective
