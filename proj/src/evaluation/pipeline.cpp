#include "stgd/evaluation/pipeline.hpp"

#include "stgd/core/errors.hpp"
#include "stgd/evaluation/generation.hpp"

namespace stgd::eval {

EvaluationResult evaluate_model(const model::StgdVae& model,
                                const std::vector<SpatiotemporalGraph>& test,
                                const EvaluationOptions& options) {
  if (test.empty()) throw UndefinedInputError("evaluation needs at least one test sequence");
  EvaluationResult out;
  MetricReport& r = out.report;
  const ReconstructionMetrics m = reconstruction_metrics(mean_reconstructor(model), test);
  r.node_mse = m.node_mse;
  r.spatial_mse = m.spatial_mse;
  r.edge_accuracy = m.edge_accuracy;

  const int count = options.num_generated > 0 ? options.num_generated : static_cast<int>(test.size());
  out.generated = generate_from_prior(model, count, static_cast<int>(test.front().length()),
                                      options.seed);
  for (Property p : kAllProperties) {
    if (p == Property::TemporalCorrelation && test.front().length() < 2) {
      r.warnings.push_back("temporal correlation needs at least two steps; kld_tcorr not applicable");
      continue;
    }
    HistogramPair h = property_histograms(property_values(test, p),
                                          property_values(out.generated, p), options.bins);
    const double kl = histogram_kld(h);
    switch (p) {
      case Property::Clustering: r.kld_cls = kl; break;
      case Property::Density: r.kld_ds = kl; break;
      case Property::Betweenness: r.kld_bet = kl; break;
      case Property::TemporalCorrelation: r.kld_tcorr = kl; break;
    }
    out.histograms.emplace(p, std::move(h));
  }

  std::vector<FactorRecord> factors;
  for (const auto& g : test) {
    if (g.factors) factors.push_back(*g.factors);
  }
  if (factors.size() != test.size()) {
    r.warnings.push_back("test sequences lack factor records; avg_mi not applicable");
  } else if (factors.size() < kMinMiSequences) {
    r.warnings.push_back("fewer than " + std::to_string(kMinMiSequences) +
                         " test sequences; avg_mi not applicable");
  } else {
    MiResult mi = avg_mi(latent_means(model, test), factors);
    r.avg_mi = mi.avg_mi;
    r.warnings.insert(r.warnings.end(), mi.warnings.begin(), mi.warnings.end());
  }
  return out;
}

}  // namespace stgd::eval
