#include "stgd/model/encoders.hpp"

#include "stgd/core/errors.hpp"

#include <array>
#include <cmath>

namespace stgd::model {

namespace {
const double kReluGain = std::sqrt(2.0);
constexpr double kHeadGain = 1.0;
// Keeps initial posteriors close to unit variance.
constexpr double kLogVarGain = 0.1;
}  // namespace

Vector reparameterize(const GaussianParams& gp, const Vector& noise) {
  return gp.mean.array() + (0.5 * gp.log_var.array()).exp() * noise.array();
}

GaussianHeads::GaussianHeads(ParameterStore& store, const std::string& name, Eigen::Index in,
                             Eigen::Index out, std::mt19937_64& rng)
    : mean_(store, name + ".mean", in, out, kHeadGain, rng),
      log_var_(store, name + ".log_var", in, out, kLogVarGain, rng) {}

GaussianVars GaussianHeads::operator()(Var x) const { return {mean_(x), log_var_(x)}; }

SpatialEncoder::SpatialEncoder(ParameterStore& store, Eigen::Index nodes, Eigen::Index coord_dim,
                               Eigen::Index latent_dim, int kernel, std::mt19937_64& rng)
    : nodes_(nodes),
      conv1_(store, "enc.spatial.conv1", coord_dim, 10, kernel, rng),
      conv2_(store, "enc.spatial.conv2", 10, 10, kernel, rng),
      conv3_(store, "enc.spatial.conv3", 10, 20, kernel, rng),
      fc_(store, "enc.spatial.fc", nodes * 20, latent_dim, kReluGain, rng),
      heads_(store, "enc.spatial.head", latent_dim, latent_dim, rng) {
  if (nodes < kernel) {
    throw ConfigError("spatial encoder: node count " + std::to_string(nodes) +
                      " is smaller than the convolution kernel " + std::to_string(kernel));
  }
}

GaussianVars SpatialEncoder::operator()(Var coords, Eigen::Index steps) const {
  Var h = nn::relu(conv1_(coords, nodes_));
  h = nn::relu(conv2_(h, nodes_));
  h = nn::relu(conv3_(h, nodes_));
  const Eigen::Index snapshots = h.rows() / nodes_;
  h = nn::reshape(h, snapshots, nodes_ * h.cols());
  h = nn::relu(fc_(h));
  return heads_(nn::group_mean(h, steps));
}

GraphEncoder::GraphEncoder(ParameterStore& store, Eigen::Index feature_dim,
                           Eigen::Index latent_dim, std::mt19937_64& rng)
    : gcn1_(store, "enc.graph.gcn1", feature_dim, 10, rng),
      gcn2_(store, "enc.graph.gcn2", 10, 20, rng),
      fc_(store, "enc.graph.fc", 20, latent_dim, kReluGain, rng),
      heads_(store, "enc.graph.head", latent_dim, latent_dim, rng) {}

GaussianVars GraphEncoder::operator()(Var features, const GraphContext& ctx,
                                      Eigen::Index steps) const {
  Var h = gcn2_(gcn1_(features, ctx), ctx);
  h = nn::relu(fc_(nn::group_mean(h, ctx.nodes)));
  return heads_(nn::group_mean(h, steps));
}

SmpnnTrunk::SmpnnTrunk(ParameterStore& store, const std::string& name, Eigen::Index feature_dim,
                       Eigen::Index out_dim, std::mt19937_64& rng)
    : layer1_(store, name + ".smpnn1", feature_dim, 20, rng),
      layer2_(store, name + ".smpnn2", 20, 50, rng),
      fc_(store, name + ".fc", 50, out_dim, kReluGain, rng) {}

Var SmpnnTrunk::operator()(Var features, const GraphContext& ctx) const {
  Var h = layer2_(layer1_(features, ctx), ctx);
  return nn::relu(fc_(nn::group_mean(h, ctx.nodes)));
}

JointEncoder::JointEncoder(ParameterStore& store, const std::string& name,
                           Eigen::Index feature_dim, Eigen::Index latent_dim, std::mt19937_64& rng)
    : trunk_(store, name, feature_dim, latent_dim, rng),
      heads_(store, name + ".head", latent_dim, latent_dim, rng) {}

GaussianVars JointEncoder::operator()(Var features, const GraphContext& ctx,
                                      Eigen::Index steps) const {
  return heads_(nn::group_mean(trunk_(features, ctx), steps));
}

TimeEncoder::TimeEncoder(ParameterStore& store, Eigen::Index feature_dim, Eigen::Index latent_dim,
                         bool conditional, std::mt19937_64& rng)
    : trunk_(store, "enc.time", feature_dim, latent_dim, rng),
      heads_(store, "enc.time.head", latent_dim, latent_dim, rng),
      conditional_(conditional) {
  if (conditional) {
    // Small start so the z_{t-1} chain does not amplify over the sequence.
    prev_mean_ = Linear(store, "enc.time.prev.mean", latent_dim, latent_dim, kLogVarGain, rng, false);
    prev_log_var_ =
        Linear(store, "enc.time.prev.log_var", latent_dim, latent_dim, kLogVarGain, rng, false);
  }
}

GaussianVars TimeEncoder::heads(Var readout_rows, std::optional<Var> previous) const {
  GaussianVars out = heads_(readout_rows);
  if (conditional_) {
    if (!previous) throw ConfigError("conditional time encoder needs z_{t-1}");
    // Equivalent to one affine head over the concatenation [readout ; z_{t-1}].
    out.mean = nn::add(out.mean, prev_mean_(*previous));
    out.log_var = nn::add(out.log_var, prev_log_var_(*previous));
  }
  return out;
}

TransitionPrior::TransitionPrior(ParameterStore& store, Eigen::Index latent_dim,
                                 std::mt19937_64& rng)
    : hidden_(store, "prior.hidden", latent_dim, latent_dim, kReluGain, rng),
      heads_(store, "prior.head", latent_dim, latent_dim, rng) {}

GaussianVars TransitionPrior::operator()(Var previous) const {
  return heads_(nn::relu(hidden_(previous)));
}

}  // namespace stgd::model
