#include "stgd/objective/objective.hpp"

#include "stgd/core/errors.hpp"

#include <algorithm>
#include <cmath>

namespace stgd::objective {

LossBreakdown& LossBreakdown::operator+=(const LossBreakdown& o) {
  recon_graph += o.recon_graph;
  recon_spatial += o.recon_spatial;
  kl_t += o.kl_t;
  kl_s += o.kl_s;
  kl_g += o.kl_g;
  kl_sg += o.kl_sg;
  r1 += o.r1;
  r2 += o.r2;
  r3 += o.r3;
  total += o.total;
  return *this;
}

LossBreakdown& LossBreakdown::operator*=(double s) {
  recon_graph *= s;
  recon_spatial *= s;
  kl_t *= s;
  kl_s *= s;
  kl_g *= s;
  kl_sg *= s;
  r1 *= s;
  r2 *= s;
  r3 *= s;
  total *= s;
  return *this;
}

double gaussian_kl_to_standard(const GaussianParams& gp) {
  if (gp.mean.size() != gp.log_var.size()) throw ShapeError("mean/log_var size mismatch");
  const auto lv = gp.log_var.array();
  return 0.5 * (lv.exp() + gp.mean.array().square() - 1.0 - lv).sum();
}

double gaussian_kl_conditional(const GaussianParams& q, const GaussianParams& p) {
  if (q.mean.size() != p.mean.size() || q.log_var.size() != p.log_var.size() ||
      q.mean.size() != q.log_var.size()) {
    throw ShapeError("KL between Gaussians of different dimension");
  }
  const auto qlv = q.log_var.array();
  const auto plv = p.log_var.array();
  const auto diff = q.mean.array() - p.mean.array();
  return 0.5 * (plv - qlv + (qlv.exp() + diff.square()) / plv.exp() - 1.0).sum();
}

namespace {

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

ReconstructionTerms reconstruction_loss(const std::vector<DecodedSnapshot>& decoded,
                                        const SpatiotemporalGraph& target,
                                        const LikelihoodScales& scales) {
  if (decoded.size() != target.snapshots.size()) {
    throw ShapeError("decoded sequence length differs from target");
  }
  const double wc = 1.0 / (2.0 * scales.coord_sigma * scales.coord_sigma);
  const double wf = 1.0 / (2.0 * scales.feature_sigma * scales.feature_sigma);
  ReconstructionTerms r;
  for (std::size_t t = 0; t < decoded.size(); ++t) {
    const DecodedSnapshot& d = decoded[t];
    const Snapshot& s = target.snapshots[t];
    if (d.edge_logits.rows() != s.adjacency.rows() || d.edge_logits.cols() != s.adjacency.cols() ||
        d.coords.rows() != s.coords.rows() || d.coords.cols() != s.coords.cols() ||
        d.node_features.rows() != s.node_features.rows() ||
        d.node_features.cols() != s.node_features.cols()) {
      throw ShapeError("decoded snapshot " + std::to_string(t) + " differs in shape from target");
    }
    const Eigen::Index n = s.adjacency.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double x = d.edge_logits(i, j);
        const double a = s.adjacency(i, j);
        // -[a log sigmoid(x) + (1 - a) log(1 - sigmoid(x))]
        r.graph += a * softplus(-x) + (1.0 - a) * softplus(x);
      }
    }
    r.graph += wf * (d.node_features - s.node_features).squaredNorm();
    r.spatial += wc * (d.coords - s.coords).squaredNorm();
  }
  return r;
}

void finish_breakdown(LossBreakdown& b, const Thresholds& th) {
  const Betas& w = th.betas;
  b.r1 = w.b2 * b.kl_s + w.b3 * b.kl_g;
  b.r2 = w.b1 * (b.kl_t - th.I_t);
  b.r3 = w.b4 * (b.kl_sg - th.I_sg);
  b.total = b.recon_graph + b.recon_spatial + b.r1 + b.r2 + b.r3;
}

LossBreakdown total_objective(const LatentPosterior& posterior,
                              const std::vector<DecodedSnapshot>& decoded,
                              const SpatiotemporalGraph& target, const Thresholds& th,
                              const std::optional<std::vector<GaussianParams>>& z_prior,
                              const LikelihoodScales& scales) {
  LossBreakdown b;
  const ReconstructionTerms r = reconstruction_loss(decoded, target, scales);
  b.recon_graph = r.graph;
  b.recon_spatial = r.spatial;
  b.kl_s = gaussian_kl_to_standard(posterior.f_s);
  b.kl_g = gaussian_kl_to_standard(posterior.f_g);
  b.kl_sg = gaussian_kl_to_standard(posterior.f_sg);
  if (z_prior && z_prior->size() != posterior.z.size()) {
    throw ShapeError("conditional prior must have one entry per step");
  }
  const std::size_t z_terms = posterior.shared_z ? std::min<std::size_t>(1, posterior.z.size())
                                                 : posterior.z.size();
  for (std::size_t t = 0; t < z_terms; ++t) {
    b.kl_t += (z_prior && t > 0) ? gaussian_kl_conditional(posterior.z[t], (*z_prior)[t])
                                 : gaussian_kl_to_standard(posterior.z[t]);
  }
  finish_breakdown(b, th);
  return b;
}

TapeObjective build_objective(const model::ForwardPass& fp, const model::Batch& batch,
                              const model::ModelConfig& config, const Thresholds& th) {
  using namespace nn;
  const double inv_b = 1.0 / static_cast<double>(batch.sequences);
  const double wc = 1.0 / (2.0 * config.coord_sigma * config.coord_sigma);
  const double wf = 1.0 / (2.0 * config.feature_sigma * config.feature_sigma);

  auto mean_sum = [inv_b](Var rows) { return scale(sum_all(rows), inv_b); };

  Var edges = mean_sum(bernoulli_nll_upper(fp.edge_logits, batch.edge_targets, batch.nodes));
  Var feats = mean_sum(squared_error_rows(fp.node_features, batch.features, wf));
  Var recon_graph = add(edges, feats);
  Var recon_spatial = mean_sum(squared_error_rows(fp.coords, batch.coords, wc));
  Var kl_s = mean_sum(standard_kl_rows(fp.f_s.mean, fp.f_s.log_var));
  Var kl_g = mean_sum(standard_kl_rows(fp.f_g.mean, fp.f_g.log_var));
  Var kl_sg = mean_sum(standard_kl_rows(fp.f_sg.mean, fp.f_sg.log_var));
  Var kl_t = fp.z_prior ? mean_sum(gaussian_kl_rows(fp.z.mean, fp.z.log_var, fp.z_prior->mean,
                                                    fp.z_prior->log_var))
                        : mean_sum(standard_kl_rows(fp.z.mean, fp.z.log_var));

  const Betas& w = th.betas;
  // The threshold offsets are constants and do not affect gradients.
  Var loss = add(add(recon_graph, recon_spatial),
                 add(add(scale(kl_s, w.b2), scale(kl_g, w.b3)),
                     add(scale(kl_t, w.b1), scale(kl_sg, w.b4))));

  TapeObjective out;
  out.values.recon_graph = recon_graph.scalar();
  out.values.recon_spatial = recon_spatial.scalar();
  out.values.kl_s = kl_s.scalar();
  out.values.kl_g = kl_g.scalar();
  out.values.kl_sg = kl_sg.scalar();
  out.values.kl_t = kl_t.scalar();
  finish_breakdown(out.values, th);
  out.loss = add(loss, loss.tape().constant(Matrix::Constant(
                           1, 1, -w.b1 * th.I_t - w.b4 * th.I_sg)));
  return out;
}

}  // namespace stgd::objective
