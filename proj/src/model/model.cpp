#include "stgd/model/model.hpp"

#include "stgd/core/errors.hpp"

#include <cmath>
#include <limits>

namespace stgd::model {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Indep: return "indep";
    case Variant::Dep: return "dep";
    case Variant::Pooled: return "pooled";
  }
  return "indep";
}

Variant parse_variant(const std::string& name) {
  if (name == "indep") return Variant::Indep;
  if (name == "dep") return Variant::Dep;
  if (name == "pooled") return Variant::Pooled;
  throw ConfigError("unknown model variant '" + name + "' (expected indep, dep or pooled)");
}

nlohmann::json ModelConfig::to_json() const {
  return {{"nodes", nodes},
          {"coord_dim", coord_dim},
          {"feature_dim", feature_dim},
          {"variant", to_string(variant)},
          {"fs_dim", fs_dim},
          {"fg_dim", fg_dim},
          {"fsg_dim", fsg_dim},
          {"z_dim", z_dim},
          {"node_channels", node_channels},
          {"edge_channels", edge_channels},
          {"kernel", kernel},
          {"coord_sigma", coord_sigma},
          {"feature_sigma", feature_sigma},
          {"input_feature_scale", input_feature_scale},
          {"init_seed", init_seed}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.nodes = j.value("nodes", c.nodes);
    c.coord_dim = j.value("coord_dim", c.coord_dim);
    c.feature_dim = j.value("feature_dim", c.feature_dim);
    c.variant = parse_variant(j.value("variant", to_string(c.variant)));
    c.fs_dim = j.value("fs_dim", c.fs_dim);
    c.fg_dim = j.value("fg_dim", c.fg_dim);
    c.fsg_dim = j.value("fsg_dim", c.fsg_dim);
    c.z_dim = j.value("z_dim", c.z_dim);
    c.node_channels = j.value("node_channels", c.node_channels);
    c.edge_channels = j.value("edge_channels", c.edge_channels);
    c.kernel = j.value("kernel", c.kernel);
    c.coord_sigma = j.value("coord_sigma", c.coord_sigma);
    c.feature_sigma = j.value("feature_sigma", c.feature_sigma);
    c.input_feature_scale = j.value("input_feature_scale", c.input_feature_scale);
    c.init_seed = j.value("init_seed", c.init_seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  if (c.nodes < 2 || c.coord_dim < 1 || c.feature_dim < 1 || c.fs_dim < 1 || c.fg_dim < 1 ||
      c.fsg_dim < 1 || c.z_dim < 1 || c.node_channels < 1 || c.edge_channels < 1 ||
      c.kernel < 1 || c.kernel % 2 == 0) {
    throw ConfigError("model config: dimensions must be positive and the kernel odd");
  }
  if (!(c.coord_sigma > 0) || !(c.feature_sigma > 0) || !(c.input_feature_scale > 0)) {
    throw ConfigError("model config: likelihood sigmas and input scale must be positive");
  }
  return c;
}

Batch Batch::build(std::span<const SpatiotemporalGraph* const> sequences) {
  if (sequences.empty()) throw ShapeError("empty batch");
  const auto& first = *sequences.front();
  if (first.snapshots.empty()) throw ShapeError("sequence without snapshots");
  Batch b;
  b.sequences = static_cast<Eigen::Index>(sequences.size());
  b.steps = static_cast<Eigen::Index>(first.snapshots.size());
  b.nodes = first.snapshots.front().coords.rows();
  const Eigen::Index d = first.snapshots.front().coords.cols();
  const Eigen::Index m = first.snapshots.front().node_features.cols();
  const Eigen::Index n = b.nodes;
  const Eigen::Index snaps = b.sequences * b.steps;

  b.coords.resize(snaps * n, d);
  b.features.resize(snaps * n, m);
  b.edge_targets.resize(snaps * n * n, 1);
  std::vector<Matrix> adjacency;
  std::vector<Matrix> coords;
  adjacency.reserve(snaps);
  coords.reserve(snaps);
  Eigen::Index r = 0;
  for (const SpatiotemporalGraph* g : sequences) {
    if (static_cast<Eigen::Index>(g->snapshots.size()) != b.steps) {
      throw ShapeError("batch sequences differ in length");
    }
    for (const Snapshot& s : g->snapshots) {
      if (s.coords.rows() != n || s.coords.cols() != d || s.node_features.cols() != m ||
          s.node_features.rows() != n || s.adjacency.rows() != n) {
        throw ShapeError("batch snapshots differ in shape");
      }
      b.coords.middleRows(r * n, n) = s.coords;
      b.features.middleRows(r * n, n) = s.node_features;
      b.edge_targets.middleRows(r * n * n, n * n) =
          Eigen::Map<const Matrix>(s.adjacency.data(), n * n, 1);
      adjacency.push_back(s.adjacency);
      coords.push_back(s.coords);
      ++r;
    }
  }
  b.graph = GraphContext::build(adjacency, coords);
  return b;
}

Batch Batch::build(const SpatiotemporalGraph& g) {
  const SpatiotemporalGraph* one[] = {&g};
  return build(std::span<const SpatiotemporalGraph* const>(one));
}

NoiseDraw NoiseDraw::zeros(const ModelConfig& c, Eigen::Index sequences, Eigen::Index steps) {
  return {Matrix::Zero(sequences, c.fs_dim), Matrix::Zero(sequences, c.fg_dim),
          Matrix::Zero(sequences, c.fsg_dim), Matrix::Zero(sequences * steps, c.z_dim)};
}

NoiseDraw NoiseDraw::sample(const ModelConfig& c, Eigen::Index sequences, Eigen::Index steps,
                            std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  NoiseDraw d = zeros(c, sequences, steps);
  for (Matrix* m : {&d.f_s, &d.f_g, &d.f_sg, &d.z}) {
    for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = normal(rng);
  }
  return d;
}

LatentSample posterior_means(const LatentPosterior& q) {
  LatentSample s{q.f_s.mean, q.f_g.mean, q.f_sg.mean, {}};
  for (const auto& z : q.z) s.z.push_back(z.mean);
  return s;
}

namespace {

DecoderShape decoder_shape(const ModelConfig& c) {
  DecoderShape s;
  s.nodes = c.nodes;
  s.coord_dim = c.coord_dim;
  s.feature_dim = c.feature_dim;
  s.node_channels = c.node_channels;
  s.edge_channels = c.edge_channels;
  s.kernel = c.kernel;
  return s;
}

Eigen::Index spatial_input_dim(const ModelConfig& c) {
  return c.variant == Variant::Pooled ? c.total_latent() : c.z_dim + c.fs_dim + c.fsg_dim;
}

Eigen::Index graph_input_dim(const ModelConfig& c) {
  return c.variant == Variant::Pooled ? c.total_latent() : c.z_dim + c.fg_dim + c.fsg_dim;
}

Var concat2(Var a, Var b) {
  const Var parts[] = {a, b};
  return nn::concat_cols(parts);
}

Var concat3(Var a, Var b, Var c) {
  const Var parts[] = {a, b, c};
  return nn::concat_cols(parts);
}

GaussianParams row_params(const GaussianVars& v, Eigen::Index row) {
  return {v.mean.value().row(row).transpose(), v.log_var.value().row(row).transpose()};
}

GaussianVars slice(const GaussianVars& v, Eigen::Index start, Eigen::Index count) {
  return {nn::slice_cols(v.mean, start, count), nn::slice_cols(v.log_var, start, count)};
}

Matrix stack_rows(const std::vector<Vector>& rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i];
  return m;
}

}  // namespace

StgdVae::StgdVae(const ModelConfig& config) : config_(config) {
  std::mt19937_64 rng(config.init_seed);
  const auto& c = config_;
  const Eigen::Index both = c.feature_dim + c.coord_dim;
  if (c.variant == Variant::Pooled) {
    pooled_enc_ = JointEncoder(params_, "enc.pooled", both, c.total_latent(), rng);
  } else {
    spatial_enc_ = SpatialEncoder(params_, c.nodes, c.coord_dim, c.fs_dim, c.kernel, rng);
    graph_enc_ = GraphEncoder(params_, c.feature_dim, c.fg_dim, rng);
    // Joint and time encoders see coordinates only through pairwise distances.
    joint_enc_ = JointEncoder(params_, "enc.joint", c.feature_dim, c.fsg_dim, rng);
    time_enc_ = TimeEncoder(params_, c.feature_dim, c.z_dim, c.variant == Variant::Dep, rng);
    if (c.variant == Variant::Dep) prior_ = TransitionPrior(params_, c.z_dim, rng);
  }
  const DecoderShape shape = decoder_shape(c);
  spatial_dec_ = SpatialDecoder(params_, spatial_input_dim(c), shape, rng);
  graph_dec_ = GraphDecoder(params_, graph_input_dim(c), shape, rng);
}

Var StgdVae::decoder_input(Var z_rows, Var exclusive_rows, Var joint_rows) const {
  return concat3(z_rows, exclusive_rows, joint_rows);
}

ForwardPass StgdVae::forward(Tape& tape, const Batch& batch, const NoiseDraw& noise) const {
  const auto& c = config_;
  const Eigen::Index nb = batch.sequences;
  const Eigen::Index steps = batch.steps;
  if (batch.nodes != c.nodes) {
    throw ShapeError("batch has " + std::to_string(batch.nodes) + " nodes, model expects " +
                     std::to_string(c.nodes));
  }
  if (batch.coords.cols() != c.coord_dim || batch.features.cols() != c.feature_dim) {
    throw ShapeError("batch coordinate/feature dimensions do not match the model");
  }
  Var coords = tape.constant(batch.coords);
  Var features = tape.constant(batch.features * c.input_feature_scale);

  ForwardPass fp;
  if (c.variant == Variant::Pooled) {
    // A single encoder has to see absolute positions directly.
    GaussianVars q = pooled_enc_(concat2(features, coords), batch.graph, steps);
    Eigen::Index at = 0;
    fp.f_s = slice(q, at, c.fs_dim);
    at += c.fs_dim;
    fp.f_g = slice(q, at, c.fg_dim);
    at += c.fg_dim;
    fp.f_sg = slice(q, at, c.fsg_dim);
    at += c.fsg_dim;
    fp.z = slice(q, at, c.z_dim);
    fp.sample_f_s = nn::reparameterize(fp.f_s.mean, fp.f_s.log_var, noise.f_s);
    fp.sample_f_g = nn::reparameterize(fp.f_g.mean, fp.f_g.log_var, noise.f_g);
    fp.sample_f_sg = nn::reparameterize(fp.f_sg.mean, fp.f_sg.log_var, noise.f_sg);
    std::vector<Eigen::Index> first_step;
    for (Eigen::Index b = 0; b < nb; ++b) first_step.push_back(b * steps);
    Var z_noise = nn::gather_rows(tape.constant(noise.z), first_step);
    Var z = nn::reparameterize(fp.z.mean, fp.z.log_var, z_noise.value());
    fp.sample_z = nn::repeat_rows(z, steps);
    const Var parts[] = {fp.sample_f_s, fp.sample_f_g, fp.sample_f_sg, z};
    Var input = nn::repeat_rows(nn::concat_cols(parts), steps);
    fp.spatial_input = input;
    fp.graph_input = input;
  } else {
    fp.f_s = spatial_enc_(coords, steps);
    fp.f_g = graph_enc_(features, batch.graph, steps);
    fp.f_sg = joint_enc_(features, batch.graph, steps);
    fp.sample_f_s = nn::reparameterize(fp.f_s.mean, fp.f_s.log_var, noise.f_s);
    fp.sample_f_g = nn::reparameterize(fp.f_g.mean, fp.f_g.log_var, noise.f_g);
    fp.sample_f_sg = nn::reparameterize(fp.f_sg.mean, fp.f_sg.log_var, noise.f_sg);

    Var readout = time_enc_.readout(features, batch.graph);
    if (c.variant == Variant::Indep) {
      fp.z = time_enc_.heads(readout);
      fp.sample_z = nn::reparameterize(fp.z.mean, fp.z.log_var, noise.z);
    } else {
      // Step-major blocks: block t holds rows (b * T + t) for every sequence b.
      std::vector<Var> means, log_vars, samples, prior_means, prior_log_vars;
      Var zero = tape.constant(Matrix::Zero(nb, c.z_dim));
      Var previous = zero;
      for (Eigen::Index t = 0; t < steps; ++t) {
        std::vector<Eigen::Index> rows;
        for (Eigen::Index b = 0; b < nb; ++b) rows.push_back(b * steps + t);
        GaussianVars q = time_enc_.heads(nn::gather_rows(readout, rows), previous);
        Matrix eps(nb, c.z_dim);
        for (Eigen::Index b = 0; b < nb; ++b) eps.row(b) = noise.z.row(rows[b]);
        Var sample = nn::reparameterize(q.mean, q.log_var, eps);
        if (t == 0 || standard_prior_) {
          prior_means.push_back(zero);
          prior_log_vars.push_back(zero);
        } else {
          GaussianVars p = prior_(previous);
          prior_means.push_back(p.mean);
          prior_log_vars.push_back(p.log_var);
        }
        means.push_back(q.mean);
        log_vars.push_back(q.log_var);
        samples.push_back(sample);
        previous = sample;
      }
      std::vector<Eigen::Index> order;
      for (Eigen::Index b = 0; b < nb; ++b) {
        for (Eigen::Index t = 0; t < steps; ++t) order.push_back(t * nb + b);
      }
      auto seq_major = [&](const std::vector<Var>& blocks) {
        return nn::gather_rows(nn::concat_rows(blocks), order);
      };
      fp.z = {seq_major(means), seq_major(log_vars)};
      fp.z_prior = GaussianVars{seq_major(prior_means), seq_major(prior_log_vars)};
      fp.sample_z = seq_major(samples);
    }
    fp.spatial_input = decoder_input(fp.sample_z, nn::repeat_rows(fp.sample_f_s, steps),
                                     nn::repeat_rows(fp.sample_f_sg, steps));
    fp.graph_input = decoder_input(fp.sample_z, nn::repeat_rows(fp.sample_f_g, steps),
                                   nn::repeat_rows(fp.sample_f_sg, steps));
  }

  fp.coords = spatial_dec_(fp.spatial_input);
  GraphDecoderOutput g = graph_dec_(fp.graph_input);
  fp.edge_logits = g.edge_logits;
  fp.node_features = g.node_features;
  return fp;
}

LatentPosterior StgdVae::encode(const SpatiotemporalGraph& g) const {
  const Batch batch = Batch::build(g);
  Tape tape;
  ForwardPass fp = forward(tape, batch, NoiseDraw::zeros(config_, 1, batch.steps));
  LatentPosterior q{row_params(fp.f_s, 0), row_params(fp.f_g, 0), row_params(fp.f_sg, 0), {},
                    config_.variant == Variant::Pooled};
  for (Eigen::Index t = 0; t < batch.steps; ++t) {
    q.z.push_back(row_params(fp.z, config_.variant == Variant::Pooled ? 0 : t));
  }
  return q;
}

GaussianParams StgdVae::encode_spatial(const SpatiotemporalGraph& g) const {
  return encode(g).f_s;
}

GaussianParams StgdVae::encode_graph(const SpatiotemporalGraph& g) const {
  return encode(g).f_g;
}

GaussianParams StgdVae::encode_joint(const SpatiotemporalGraph& g) const {
  return encode(g).f_sg;
}

std::vector<GaussianParams> StgdVae::encode_time(const SpatiotemporalGraph& g,
                                                 const Vector* initial_previous) const {
  if (config_.variant != Variant::Dep || initial_previous == nullptr) return encode(g).z;
  if (initial_previous->size() != config_.z_dim) throw ShapeError("z_0 has the wrong width");
  const Batch batch = Batch::build(g);
  Tape tape;
  Var readout =
      time_enc_.readout(tape.constant(batch.features * config_.input_feature_scale), batch.graph);
  Var previous = tape.constant(initial_previous->transpose());
  std::vector<GaussianParams> out;
  for (Eigen::Index t = 0; t < batch.steps; ++t) {
    GaussianVars q = time_enc_.heads(nn::gather_rows(readout, {t}), previous);
    out.push_back(row_params(q, 0));
    previous = q.mean;
  }
  return out;
}

std::pair<Var, Var> StgdVae::decoder_inputs(Tape& tape, const LatentSample& latents) const {
  const auto& c = config_;
  const auto steps = static_cast<Eigen::Index>(latents.z.size());
  if (steps == 0) throw ShapeError("latent sample has no steps");
  if (latents.f_s.size() != c.fs_dim || latents.f_g.size() != c.fg_dim ||
      latents.f_sg.size() != c.fsg_dim) {
    throw ShapeError("latent sample widths do not match the model");
  }
  for (const Vector& z : latents.z) {
    if (z.size() != c.z_dim) throw ShapeError("latent sample z width does not match the model");
  }
  Var z = tape.constant(stack_rows(latents.z));
  Var fs = nn::repeat_rows(tape.constant(latents.f_s.transpose()), steps);
  Var fg = nn::repeat_rows(tape.constant(latents.f_g.transpose()), steps);
  Var fsg = nn::repeat_rows(tape.constant(latents.f_sg.transpose()), steps);
  if (c.variant == Variant::Pooled) {
    const Var parts[] = {fs, fg, fsg, z};
    Var input = nn::concat_cols(parts);
    return {input, input};
  }
  return {decoder_input(z, fs, fsg), decoder_input(z, fg, fsg)};
}

DecoderInputs StgdVae::decoder_inputs(const LatentSample& latents) const {
  Tape tape;
  auto [spatial, graph] = decoder_inputs(tape, latents);
  return {spatial.value(), graph.value()};
}

std::vector<DecodedSnapshot> StgdVae::decode(const LatentSample& latents) const {
  Tape tape;
  auto [spatial, graph] = decoder_inputs(tape, latents);
  const Matrix coords = spatial_dec_(spatial).value();
  GraphDecoderOutput g = graph_dec_(graph);
  const Eigen::Index n = config_.nodes;
  std::vector<DecodedSnapshot> out;
  for (std::size_t t = 0; t < latents.z.size(); ++t) {
    const auto r = static_cast<Eigen::Index>(t);
    DecodedSnapshot d;
    d.edge_logits = Eigen::Map<const Matrix>(g.edge_logits.value().data() + r * n * n, n, n);
    d.node_features = g.node_features.value().middleRows(r * n, n);
    d.coords = coords.middleRows(r * n, n);
    out.push_back(std::move(d));
  }
  return out;
}

GaussianParams StgdVae::transition_prior(const Vector& previous) const {
  if (config_.variant != Variant::Dep) throw ConfigError("transition prior exists only for dep");
  if (standard_prior_) {
    return {Vector::Zero(config_.z_dim), Vector::Zero(config_.z_dim)};
  }
  Tape tape;
  GaussianVars p = prior_(tape.constant(previous.transpose()));
  return row_params(p, 0);
}

Snapshot to_snapshot(const DecodedSnapshot& d) {
  Snapshot s;
  s.coords = d.coords;
  s.node_features = d.node_features;
  s.adjacency = (1.0 / (1.0 + (-d.edge_logits.array()).exp())).matrix();
  s.adjacency.diagonal().setZero();
  return s;
}

SpatiotemporalGraph to_graph(const std::vector<DecodedSnapshot>& decoded) {
  SpatiotemporalGraph g;
  for (const auto& d : decoded) g.snapshots.push_back(to_snapshot(d));
  return g;
}

}  // namespace stgd::model
