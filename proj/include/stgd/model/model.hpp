#pragma once

#include "stgd/core/graph.hpp"
#include "stgd/model/decoders.hpp"
#include "stgd/model/encoders.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>

namespace stgd::model {

/// indep: factorized posterior with standard priors.
/// dep: q(z_t | z_{t-1}, S_t, G_t) with a learned transition prior.
/// pooled: ablation with one encoder over the whole sequence whose latent
///         (same total width) feeds both decoders; no factor routing.
enum class Variant { Indep, Dep, Pooled };

std::string to_string(Variant v);
Variant parse_variant(const std::string& name);

struct ModelConfig {
  Eigen::Index nodes = 25;
  Eigen::Index coord_dim = 2;
  Eigen::Index feature_dim = 2;
  Variant variant = Variant::Indep;
  Eigen::Index fs_dim = 100;
  Eigen::Index fg_dim = 100;
  Eigen::Index fsg_dim = 200;
  Eigen::Index z_dim = 200;
  Eigen::Index node_channels = 20;
  Eigen::Index edge_channels = 8;
  int kernel = 5;
  /// Fixed standard deviations of the Gaussian coordinate / feature likelihoods.
  double coord_sigma = 1.0;
  double feature_sigma = 1.0;
  /// Node features are multiplied by this before entering the encoders so
  /// raw colors/sizes of order 10 start in the unit range. Targets stay raw.
  double input_feature_scale = 0.1;
  std::uint64_t init_seed = 0;

  Eigen::Index total_latent() const { return fs_dim + fg_dim + fsg_dim + z_dim; }
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

/// A batch of equally shaped sequences as tape constants. Snapshot rows are
/// sequence-major: row (b * T + t).
struct Batch {
  Eigen::Index sequences = 0;
  Eigen::Index steps = 0;
  Eigen::Index nodes = 0;
  Matrix coords;        // (B*T*N) x D
  Matrix features;      // (B*T*N) x M
  Matrix edge_targets;  // (B*T*N*N) x 1
  GraphContext graph;

  static Batch build(std::span<const SpatiotemporalGraph* const> sequences);
  static Batch build(const SpatiotemporalGraph& g);
};

/// Standard-normal noise for one batch; zeros give posterior means.
struct NoiseDraw {
  Matrix f_s, f_g, f_sg;  // B x dim
  Matrix z;               // (B*T) x z_dim

  static NoiseDraw zeros(const ModelConfig& c, Eigen::Index sequences, Eigen::Index steps);
  static NoiseDraw sample(const ModelConfig& c, Eigen::Index sequences, Eigen::Index steps,
                          std::mt19937_64& rng);
};

struct ForwardPass {
  GaussianVars f_s, f_g, f_sg;
  /// (B*T) rows, sequence-major; for Pooled one time-invariant row per sequence.
  GaussianVars z;
  /// Dep only: transition prior per step (rows of t = 0 hold N(0, I)).
  std::optional<GaussianVars> z_prior;
  Var sample_f_s, sample_f_g, sample_f_sg;
  Var sample_z;  // (B*T) rows
  Var spatial_input;
  Var graph_input;
  Var coords;         // (B*T*N) x D
  Var edge_logits;    // (B*T*N*N) x 1
  Var node_features;  // (B*T*N) x M
};

/// Concrete latent values for decoding one sequence.
struct LatentSample {
  Vector f_s, f_g, f_sg;
  std::vector<Vector> z;
};

LatentSample posterior_means(const LatentPosterior& q);

struct DecoderInputs {
  Matrix spatial;  // T x input width
  Matrix graph;    // T x input width
};

class StgdVae {
 public:
  explicit StgdVae(const ModelConfig& config);
  StgdVae(StgdVae&&) = default;
  StgdVae& operator=(StgdVae&&) = default;

  const ModelConfig& config() const { return config_; }
  ParameterStore& parameters() { return params_; }
  const ParameterStore& parameters() const { return params_; }

  /// Forces the Dep transition prior to N(0, I) at every step.
  void set_standard_prior(bool on) { standard_prior_ = on; }
  bool standard_prior() const { return standard_prior_; }

  ForwardPass forward(Tape& tape, const Batch& batch, const NoiseDraw& noise) const;

  /// Posterior of one sequence (Dep chains posterior means through z_{t-1}).
  LatentPosterior encode(const SpatiotemporalGraph& g) const;
  GaussianParams encode_spatial(const SpatiotemporalGraph& g) const;
  GaussianParams encode_graph(const SpatiotemporalGraph& g) const;
  GaussianParams encode_joint(const SpatiotemporalGraph& g) const;
  /// Per-step z posteriors. For Dep, `initial_previous` replaces the zero z_0.
  std::vector<GaussianParams> encode_time(const SpatiotemporalGraph& g,
                                          const Vector* initial_previous = nullptr) const;

  DecoderInputs decoder_inputs(const LatentSample& latents) const;
  std::vector<DecodedSnapshot> decode(const LatentSample& latents) const;

  /// Transition prior p(z_t | previous) as values (Dep only).
  GaussianParams transition_prior(const Vector& previous) const;

 private:
  Var decoder_input(Var z_rows, Var exclusive_rows, Var joint_rows) const;
  std::pair<Var, Var> decoder_inputs(Tape& tape, const LatentSample& latents) const;

  ModelConfig config_;
  ParameterStore params_;
  bool standard_prior_ = false;
  SpatialEncoder spatial_enc_;
  GraphEncoder graph_enc_;
  JointEncoder joint_enc_;
  TimeEncoder time_enc_;
  JointEncoder pooled_enc_;
  TransitionPrior prior_;
  SpatialDecoder spatial_dec_;
  GraphDecoder graph_dec_;
};

/// Sigmoid of decoded logits with a zero diagonal, as a Snapshot.
Snapshot to_snapshot(const DecodedSnapshot& d);
SpatiotemporalGraph to_graph(const std::vector<DecodedSnapshot>& decoded);

}  // namespace stgd::model
