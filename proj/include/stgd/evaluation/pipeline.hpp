#pragma once

#include "stgd/evaluation/metrics.hpp"
#include "stgd/model/model.hpp"

#include <cstdint>
#include <map>

namespace stgd::eval {

struct EvaluationOptions {
  /// Prior samples for the property KLDs; 0 means one per reference sequence.
  int num_generated = 0;
  int bins = 20;
  std::uint64_t seed = 0;
};

struct EvaluationResult {
  MetricReport report;
  std::map<Property, HistogramPair> histograms;
  std::vector<SpatiotemporalGraph> generated;
};

/// Reconstruction metrics and avg_mi on `test`, and property KLDs of prior
/// samples against `test`. avg_mi is left unset (with a warning) when the
/// sequences lack factor records or number fewer than kMinMiSequences.
EvaluationResult evaluate_model(const model::StgdVae& model,
                                const std::vector<SpatiotemporalGraph>& test,
                                const EvaluationOptions& options = {});

}  // namespace stgd::eval
