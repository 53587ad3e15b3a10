#pragma once

#include "stgd/core/graph.hpp"
#include "stgd/model/model.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace stgd::eval {

/// One metric column per field; unset means not applicable.
struct MetricReport {
  std::optional<double> node_mse;
  std::optional<double> spatial_mse;
  std::optional<double> edge_accuracy;
  std::optional<double> kld_cls;
  std::optional<double> kld_ds;
  std::optional<double> kld_bet;
  std::optional<double> kld_tcorr;
  std::optional<double> avg_mi;
  std::vector<std::string> warnings;

  /// Every column key is present; not-applicable columns are null.
  nlohmann::json to_json() const;
  /// Fixed-width two-line table in column order.
  std::string to_table() const;
};

/// Maps a sequence to its reconstruction; adjacency entries are edge probabilities.
using Reconstructor = std::function<SpatiotemporalGraph(const SpatiotemporalGraph&)>;

/// Encodes with posterior means, decodes, and converts logits to probabilities.
Reconstructor mean_reconstructor(const model::StgdVae& model);

struct ReconstructionMetrics {
  double node_mse = 0;
  double spatial_mse = 0;
  double edge_accuracy = 0;
};

/// MSE over every feature / coordinate entry, and the fraction of node pairs
/// (i < j) whose prediction at 0.5 matches the target, over all steps and sequences.
ReconstructionMetrics reconstruction_metrics(const Reconstructor& reconstruct,
                                             const std::vector<SpatiotemporalGraph>& data);

enum class Property { Density, Clustering, Betweenness, TemporalCorrelation };

std::string to_string(Property p);
inline constexpr Property kAllProperties[] = {Property::Clustering, Property::Density,
                                              Property::Betweenness,
                                              Property::TemporalCorrelation};

/// Property samples of a set: density and clustering per snapshot, betweenness
/// per node of every snapshot, temporal correlation per sequence.
std::vector<double> property_values(const std::vector<SpatiotemporalGraph>& set, Property p);

struct HistogramPair {
  double lo = 0, hi = 0;
  std::vector<double> reference;  // smoothed probabilities
  std::vector<double> generated;
};

/// Equal-width bins over the reference range (widened by 0.5 on each side
/// when degenerate); out-of-range generated values fall into the end bins.
/// `smoothing` is added to every bin probability before renormalizing.
HistogramPair property_histograms(const std::vector<double>& reference,
                                  const std::vector<double>& generated, int bins = 20,
                                  double smoothing = 1e-6);

/// KL(reference || generated) of the smoothed histograms.
double property_kld(const std::vector<SpatiotemporalGraph>& generated,
                    const std::vector<SpatiotemporalGraph>& reference, Property p, int bins = 20);
double histogram_kld(const HistogramPair& h);

/// Per-sequence posterior-mean summaries, one row per sequence.
struct LatentTable {
  Matrix f_s, f_g, f_sg;
  Matrix z_summary;  // mean over steps of the z_t means
};

LatentTable latent_means(const model::StgdVae& model, const std::vector<SpatiotemporalGraph>& data);
LatentTable latent_table(const std::vector<model::LatentPosterior>& posteriors);

inline constexpr int kMiBins = 20;
inline constexpr std::size_t kMinMiSequences = 100;

struct MiResult {
  /// Rows f_s, f_g, f_sg, z; columns p, b, s, time slope. Excluded columns are NaN.
  Eigen::Matrix4d matrix = Eigen::Matrix4d::Zero();
  double avg_mi = 0;
  std::vector<std::string> warnings;
};

/// First principal-component projection of the rows of `x`.
Vector principal_projection(const Matrix& x);
/// Quantile bin index of every value; equal values share a bin.
std::vector<int> quantile_bins(const Vector& values, int bins);
/// Discrete mutual information (nats) of two label vectors.
double mutual_information(const std::vector<int>& a, const std::vector<int>& b);
double entropy(const std::vector<int>& labels);

/// Entropy-normalized MI matrix and its mean squared error to the identity.
/// Throws UndefinedInputError for fewer than kMinMiSequences rows.
MiResult avg_mi(const LatentTable& latents, const std::vector<FactorRecord>& factors);

}  // namespace stgd::eval
