#pragma once

#include "stgd/model/layers.hpp"

#include <optional>

namespace stgd::model {

/// Diagonal Gaussian parameters as values.
struct GaussianParams {
  Vector mean;
  Vector log_var;

  bool operator==(const GaussianParams& o) const { return mean == o.mean && log_var == o.log_var; }
};

/// Diagonal Gaussian parameters on a tape; one row per item.
struct GaussianVars {
  Var mean;
  Var log_var;
};

/// Posterior over the four factor groups of one sequence.
struct LatentPosterior {
  GaussianParams f_s;
  GaussianParams f_g;
  GaussianParams f_sg;
  std::vector<GaussianParams> z;
  /// One z shared by all steps (pooled); `z` then repeats a single posterior.
  bool shared_z = false;
};

/// mean + exp(0.5 * log_var) * noise.
Vector reparameterize(const GaussianParams& gp, const Vector& noise);

/// Two parallel linear heads emitting (mean, log_var).
class GaussianHeads {
 public:
  GaussianHeads() = default;
  GaussianHeads(ParameterStore& store, const std::string& name, Eigen::Index in,
                Eigen::Index out, std::mt19937_64& rng);
  GaussianVars operator()(Var x) const;

 private:
  Linear mean_;
  Linear log_var_;
};

/// q(f_s | S_1:T): per snapshot three node-axis convolutions, flatten, FC;
/// mean over time; Gaussian heads.
class SpatialEncoder {
 public:
  SpatialEncoder() = default;
  SpatialEncoder(ParameterStore& store, Eigen::Index nodes, Eigen::Index coord_dim,
                 Eigen::Index latent_dim, int kernel, std::mt19937_64& rng);

  /// coords: (B*T*N) x D.
  GaussianVars operator()(Var coords, Eigen::Index steps) const;

 private:
  Eigen::Index nodes_ = 0;
  Conv1d conv1_, conv2_, conv3_;
  Linear fc_;
  GaussianHeads heads_;
};

/// q(f_g | G_1:T): two GCN layers, node-mean readout, FC; mean over time.
class GraphEncoder {
 public:
  GraphEncoder() = default;
  GraphEncoder(ParameterStore& store, Eigen::Index feature_dim, Eigen::Index latent_dim,
               std::mt19937_64& rng);

  GaussianVars operator()(Var features, const GraphContext& ctx, Eigen::Index steps) const;

 private:
  GcnLayer gcn1_, gcn2_;
  Linear fc_;
  GaussianHeads heads_;
};

/// Two S-MPNN layers with node-mean readout and an FC; one row per snapshot.
class SmpnnTrunk {
 public:
  SmpnnTrunk() = default;
  SmpnnTrunk(ParameterStore& store, const std::string& name, Eigen::Index feature_dim,
             Eigen::Index out_dim, std::mt19937_64& rng);

  Var operator()(Var features, const GraphContext& ctx) const;

 private:
  SmpnnLayer layer1_, layer2_;
  Linear fc_;
};

/// q(f_sg | S_1:T, G_1:T): S-MPNN trunk, mean over time, Gaussian heads.
class JointEncoder {
 public:
  JointEncoder() = default;
  JointEncoder(ParameterStore& store, const std::string& name, Eigen::Index feature_dim,
               Eigen::Index latent_dim, std::mt19937_64& rng);

  GaussianVars operator()(Var features, const GraphContext& ctx, Eigen::Index steps) const;

 private:
  SmpnnTrunk trunk_;
  GaussianHeads heads_;
};

/// q(z_t | S_t, G_t), or q(z_t | z_{t-1}, S_t, G_t) when `conditional`.
/// The trunk is shared across steps; no temporal pooling.
class TimeEncoder {
 public:
  TimeEncoder() = default;
  TimeEncoder(ParameterStore& store, Eigen::Index feature_dim, Eigen::Index latent_dim,
              bool conditional, std::mt19937_64& rng);

  /// One readout row per snapshot.
  Var readout(Var features, const GraphContext& ctx) const { return trunk_(features, ctx); }
  /// Heads for a block of readout rows; `previous` is the sampled z_{t-1}
  /// (required iff conditional).
  GaussianVars heads(Var readout_rows, std::optional<Var> previous = std::nullopt) const;
  bool conditional() const { return conditional_; }

 private:
  SmpnnTrunk trunk_;
  GaussianHeads heads_;
  Linear prev_mean_, prev_log_var_;
  bool conditional_ = false;
};

/// Conditional prior p(z_t | z_{t-1}) = N(mu(z_{t-1}), sigma(z_{t-1})).
class TransitionPrior {
 public:
  TransitionPrior() = default;
  TransitionPrior(ParameterStore& store, Eigen::Index latent_dim, std::mt19937_64& rng);

  GaussianVars operator()(Var previous) const;

 private:
  Linear hidden_;
  GaussianHeads heads_;
};

}  // namespace stgd::model
