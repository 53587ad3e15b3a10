#include "stgd/evaluation/generation.hpp"

#include "stgd/core/errors.hpp"
#include "stgd/datasets/generators.hpp"

namespace stgd::eval {

std::string to_string(LatentGroup g) {
  switch (g) {
    case LatentGroup::FS: return "f_s";
    case LatentGroup::FG: return "f_g";
    case LatentGroup::FSG: return "f_sg";
    case LatentGroup::Z: return "z";
  }
  return "?";
}

LatentGroup parse_group(const std::string& name) {
  if (name == "f_s") return LatentGroup::FS;
  if (name == "f_g") return LatentGroup::FG;
  if (name == "f_sg") return LatentGroup::FSG;
  if (name == "z") return LatentGroup::Z;
  throw ConfigError("unknown latent group '" + name + "' (expected f_s, f_g, f_sg or z)");
}

std::vector<double> default_traversal_values() {
  std::vector<double> v;
  for (int i = 0; i <= 10; ++i) v.push_back(-5.0 + i);
  return v;
}

std::vector<model::LatentSample> traversal_latents(const model::StgdVae& model,
                                                   const SpatiotemporalGraph& base,
                                                   LatentGroup group, int dim,
                                                   const std::vector<double>& values) {
  const model::ModelConfig& c = model.config();
  const Eigen::Index width = group == LatentGroup::FS    ? c.fs_dim
                             : group == LatentGroup::FG  ? c.fg_dim
                             : group == LatentGroup::FSG ? c.fsg_dim
                                                         : c.z_dim;
  if (dim < 0 || dim >= width) {
    throw ConfigError("traversal dim " + std::to_string(dim) + " is outside group " +
                      to_string(group) + " of width " + std::to_string(width));
  }
  const model::LatentSample means = model::posterior_means(model.encode(base));
  std::vector<model::LatentSample> out;
  for (double v : values) {
    model::LatentSample s = means;
    switch (group) {
      case LatentGroup::FS: s.f_s(dim) = v; break;
      case LatentGroup::FG: s.f_g(dim) = v; break;
      case LatentGroup::FSG: s.f_sg(dim) = v; break;
      case LatentGroup::Z:
        for (Vector& z : s.z) z(dim) = v;
        break;
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<SpatiotemporalGraph> latent_traversal(const model::StgdVae& model,
                                                  const SpatiotemporalGraph& base,
                                                  LatentGroup group, int dim,
                                                  const std::vector<double>& values) {
  std::vector<SpatiotemporalGraph> out;
  for (const auto& s : traversal_latents(model, base, group, dim, values)) {
    out.push_back(model::to_graph(model.decode(s)));
  }
  return out;
}

model::LatentSample sample_prior(const model::StgdVae& model, int steps, std::mt19937_64& rng) {
  const model::ModelConfig& c = model.config();
  std::normal_distribution<double> normal;
  auto draw = [&](Eigen::Index d) {
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = normal(rng);
    return v;
  };
  model::LatentSample s;
  s.f_s = draw(c.fs_dim);
  s.f_g = draw(c.fg_dim);
  s.f_sg = draw(c.fsg_dim);
  for (int t = 0; t < steps; ++t) {
    if (t == 0) {
      s.z.push_back(draw(c.z_dim));
    } else if (c.variant == model::Variant::Dep) {
      const model::GaussianParams p = model.transition_prior(s.z.back());
      s.z.push_back(model::reparameterize(p, draw(c.z_dim)));
    } else {
      s.z.push_back(s.z.front());
    }
  }
  return s;
}

std::vector<SpatiotemporalGraph> generate_from_prior(const model::StgdVae& model, int count,
                                                     int steps, std::uint64_t seed) {
  std::vector<SpatiotemporalGraph> out;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const Eigen::Index n = model.config().nodes;
  for (int k = 0; k < count; ++k) {
    std::mt19937_64 rng(data::mix_seed(seed, static_cast<std::uint64_t>(k)));
    SpatiotemporalGraph g = model::to_graph(model.decode(sample_prior(model, steps, rng)));
    Matrix u = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) u(i, j) = u(j, i) = uniform(rng);
    }
    for (Snapshot& s : g.snapshots) {
      s.adjacency = (u.array() < s.adjacency.array()).cast<double>().matrix();
      s.adjacency.diagonal().setZero();
    }
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace stgd::eval
