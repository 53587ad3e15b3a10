#include "stgd/evaluation/metrics.hpp"

#include "stgd/core/errors.hpp"
#include "stgd/core/statistics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

namespace stgd::eval {

namespace {

const char* const kColumns[] = {"node_mse", "spatial_mse", "edge_accuracy", "kld_cls",
                                "kld_ds",   "kld_bet",     "kld_tcorr",     "avg_mi"};

std::vector<const std::optional<double>*> columns(const MetricReport& r) {
  return {&r.node_mse, &r.spatial_mse, &r.edge_accuracy, &r.kld_cls,
          &r.kld_ds,   &r.kld_bet,     &r.kld_tcorr,     &r.avg_mi};
}

}  // namespace

nlohmann::json MetricReport::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  const auto values = columns(*this);
  for (std::size_t i = 0; i < values.size(); ++i) {
    j[kColumns[i]] = values[i]->has_value() ? nlohmann::json(**values[i]) : nlohmann::json(nullptr);
  }
  j["warnings"] = warnings;
  return j;
}

std::string MetricReport::to_table() const {
  std::string head, row;
  char buf[64];
  const auto values = columns(*this);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%-14s", kColumns[i]);
    head += buf;
    if (values[i]->has_value()) {
      std::snprintf(buf, sizeof buf, "%-14.6g", **values[i]);
    } else {
      std::snprintf(buf, sizeof buf, "%-14s", "n/a");
    }
    row += buf;
  }
  return head + "\n" + row + "\n";
}

Reconstructor mean_reconstructor(const model::StgdVae& model) {
  return [&model](const SpatiotemporalGraph& g) {
    return model::to_graph(model.decode(model::posterior_means(model.encode(g))));
  };
}

ReconstructionMetrics reconstruction_metrics(const Reconstructor& reconstruct,
                                             const std::vector<SpatiotemporalGraph>& data) {
  if (data.empty()) throw UndefinedInputError("reconstruction_metrics needs at least one sequence");
  double feat_sq = 0, coord_sq = 0;
  double feat_n = 0, coord_n = 0, pairs = 0, correct = 0;
  for (const SpatiotemporalGraph& g : data) {
    const SpatiotemporalGraph r = reconstruct(g);
    if (r.length() != g.length()) throw ShapeError("reconstruction changed the sequence length");
    for (std::size_t t = 0; t < g.length(); ++t) {
      const Snapshot& a = g.snapshots[t];
      const Snapshot& b = r.snapshots[t];
      if (b.adjacency.rows() != a.adjacency.rows() || b.coords.cols() != a.coords.cols() ||
          b.node_features.cols() != a.node_features.cols()) {
        throw ShapeError("reconstruction differs in shape from its target");
      }
      feat_sq += (b.node_features - a.node_features).squaredNorm();
      feat_n += static_cast<double>(a.node_features.size());
      coord_sq += (b.coords - a.coords).squaredNorm();
      coord_n += static_cast<double>(a.coords.size());
      const Eigen::Index n = a.adjacency.rows();
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
          const bool truth = a.adjacency(i, j) > kEdgeThreshold;
          const bool pred = b.adjacency(i, j) > kEdgeThreshold;
          correct += truth == pred ? 1.0 : 0.0;
          pairs += 1.0;
        }
      }
    }
  }
  ReconstructionMetrics m;
  m.node_mse = feat_n > 0 ? feat_sq / feat_n : 0.0;
  m.spatial_mse = coord_n > 0 ? coord_sq / coord_n : 0.0;
  m.edge_accuracy = pairs > 0 ? correct / pairs : 1.0;
  return m;
}

std::string to_string(Property p) {
  switch (p) {
    case Property::Density: return "density";
    case Property::Clustering: return "clustering";
    case Property::Betweenness: return "betweenness";
    case Property::TemporalCorrelation: return "tcorr";
  }
  return "?";
}

std::vector<double> property_values(const std::vector<SpatiotemporalGraph>& set, Property p) {
  std::vector<double> out;
  for (const SpatiotemporalGraph& g : set) {
    if (p == Property::TemporalCorrelation) {
      out.push_back(temporal_correlation(g));
      continue;
    }
    for (const Snapshot& s : g.snapshots) {
      switch (p) {
        case Property::Density: out.push_back(graph_density(s)); break;
        case Property::Clustering: out.push_back(clustering_coefficient(s)); break;
        case Property::Betweenness: {
          const auto cb = betweenness_centrality(s);
          out.insert(out.end(), cb.begin(), cb.end());
          break;
        }
        default: break;
      }
    }
  }
  return out;
}

HistogramPair property_histograms(const std::vector<double>& reference,
                                  const std::vector<double>& generated, int bins,
                                  double smoothing) {
  if (reference.empty() || generated.empty()) {
    throw UndefinedInputError("property histograms need nonempty reference and generated sets");
  }
  if (bins < 1) throw ConfigError("histogram bin count must be positive");
  HistogramPair h;
  const auto [lo, hi] = std::minmax_element(reference.begin(), reference.end());
  h.lo = *lo;
  h.hi = *hi;
  if (!(h.hi > h.lo)) {
    h.lo -= 0.5;
    h.hi += 0.5;
  }
  auto histogram = [&](const std::vector<double>& values) {
    std::vector<double> p(bins, 0.0);
    const double width = (h.hi - h.lo) / bins;
    for (double v : values) {
      int b = static_cast<int>(std::floor((v - h.lo) / width));
      p[std::clamp(b, 0, bins - 1)] += 1.0;
    }
    double total = 0;
    for (double& x : p) {
      x = x / static_cast<double>(values.size()) + smoothing;
      total += x;
    }
    for (double& x : p) x /= total;
    return p;
  };
  h.reference = histogram(reference);
  h.generated = histogram(generated);
  return h;
}

double histogram_kld(const HistogramPair& h) {
  double kl = 0;
  for (std::size_t i = 0; i < h.reference.size(); ++i) {
    kl += h.reference[i] * std::log(h.reference[i] / h.generated[i]);
  }
  return std::max(kl, 0.0);
}

double property_kld(const std::vector<SpatiotemporalGraph>& generated,
                    const std::vector<SpatiotemporalGraph>& reference, Property p, int bins) {
  return histogram_kld(
      property_histograms(property_values(reference, p), property_values(generated, p), bins));
}

LatentTable latent_table(const std::vector<model::LatentPosterior>& posteriors) {
  if (posteriors.empty()) throw UndefinedInputError("latent table needs at least one posterior");
  const auto rows = static_cast<Eigen::Index>(posteriors.size());
  const auto& first = posteriors.front();
  LatentTable t;
  t.f_s.resize(rows, first.f_s.mean.size());
  t.f_g.resize(rows, first.f_g.mean.size());
  t.f_sg.resize(rows, first.f_sg.mean.size());
  t.z_summary.resize(rows, first.z.empty() ? 0 : first.z.front().mean.size());
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& q = posteriors[r];
    t.f_s.row(r) = q.f_s.mean.transpose();
    t.f_g.row(r) = q.f_g.mean.transpose();
    t.f_sg.row(r) = q.f_sg.mean.transpose();
    Vector z = Vector::Zero(t.z_summary.cols());
    for (const auto& zt : q.z) z += zt.mean;
    if (!q.z.empty()) z /= static_cast<double>(q.z.size());
    t.z_summary.row(r) = z.transpose();
  }
  return t;
}

LatentTable latent_means(const model::StgdVae& model, const std::vector<SpatiotemporalGraph>& data) {
  std::vector<model::LatentPosterior> q;
  q.reserve(data.size());
  for (const auto& g : data) q.push_back(model.encode(g));
  return latent_table(q);
}

Vector principal_projection(const Matrix& x) {
  const Matrix centered = x.rowwise() - x.colwise().mean();
  if (x.cols() == 1) return centered.col(0);
  const Eigen::MatrixXd cov = centered.transpose() * centered;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Vector axis = eig.eigenvectors().col(cov.rows() - 1);
  return centered * axis;
}

std::vector<int> quantile_bins(const Vector& values, int bins) {
  const auto n = static_cast<std::size_t>(values.size());
  std::vector<double> sorted(values.data(), values.data() + n);
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> cuts;
  for (int k = 1; k < bins; ++k) cuts.push_back(sorted[k * n / bins]);
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = static_cast<int>(std::upper_bound(cuts.begin(), cuts.end(), values(i)) - cuts.begin());
  }
  return out;
}

double entropy(const std::vector<int>& labels) {
  std::map<int, double> counts;
  for (int l : labels) counts[l] += 1.0;
  const auto n = static_cast<double>(labels.size());
  double h = 0;
  for (const auto& [_, c] : counts) h -= c / n * std::log(c / n);
  return h;
}

double mutual_information(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw ShapeError("mutual information of unequal-length labels");
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> pa, pb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0;
    pa[a[i]] += 1.0;
    pb[b[i]] += 1.0;
  }
  const auto n = static_cast<double>(a.size());
  double mi = 0;
  for (const auto& [key, c] : joint) {
    mi += c / n * std::log(c * n / (pa[key.first] * pb[key.second]));
  }
  return std::max(mi, 0.0);
}

MiResult avg_mi(const LatentTable& latents, const std::vector<FactorRecord>& factors) {
  const std::size_t n = factors.size();
  const Matrix* groups[] = {&latents.f_s, &latents.f_g, &latents.f_sg, &latents.z_summary};
  for (const Matrix* g : groups) {
    if (static_cast<std::size_t>(g->rows()) != n) {
      throw ShapeError("latent table and factor list differ in length");
    }
  }
  if (n < kMinMiSequences) {
    throw UndefinedInputError("avg_mi needs at least " + std::to_string(kMinMiSequences) +
                              " sequences, got " + std::to_string(n));
  }
  const char* factor_names[] = {"p", "b", "s", "time_slope"};
  std::vector<std::vector<int>> factor_labels(4, std::vector<int>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const FactorRecord& f = factors[i];
    const double values[] = {f.spatial_factor_p, f.graph_factor_b, f.joint_factor_s, f.time_slope};
    for (int c = 0; c < 4; ++c) factor_labels[c][i] = static_cast<int>(std::lround(values[c]));
  }
  std::vector<std::vector<int>> latent_labels;
  for (const Matrix* g : groups) latent_labels.push_back(quantile_bins(principal_projection(*g), kMiBins));

  MiResult r;
  double sq = 0;
  int terms = 0;
  for (int c = 0; c < 4; ++c) {
    const double h = entropy(factor_labels[c]);
    if (h <= 0) {
      r.warnings.push_back(std::string("factor ") + factor_names[c] +
                           " has zero entropy; column excluded from avg_mi");
      r.matrix.col(c).setConstant(std::nan(""));
      continue;
    }
    for (int g = 0; g < 4; ++g) {
      const double v = std::min(1.0, mutual_information(latent_labels[g], factor_labels[c]) / h);
      r.matrix(g, c) = v;
      const double target = g == c ? 1.0 : 0.0;
      sq += (v - target) * (v - target);
      ++terms;
    }
  }
  if (terms == 0) throw UndefinedInputError("every factor has zero entropy");
  r.avg_mi = sq / terms;
  return r;
}

}  // namespace stgd::eval
