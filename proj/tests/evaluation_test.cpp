#include "stgd/evaluation/generation.hpp"
#include "stgd/evaluation/metrics.hpp"
#include "stgd/evaluation/plots.hpp"

#include "stgd/core/errors.hpp"

#include "support/fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace stgd;
using namespace stgd::eval;

namespace {

std::vector<SpatiotemporalGraph> sequences(int count, int nodes, int steps, std::uint64_t seed) {
  std::vector<SpatiotemporalGraph> out;
  for (int i = 0; i < count; ++i) out.push_back(stgd::testing::small_sequence(nodes, steps, seed + i));
  return out;
}

std::vector<FactorRecord> random_factors(int n, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> p(1, 11), b(1, 11), s(4, 11), slope(1, 5);
  std::vector<FactorRecord> out(n);
  for (auto& f : out) {
    f.spatial_factor_p = p(rng);
    f.graph_factor_b = b(rng);
    f.joint_factor_s = s(rng);
    f.time_slope = slope(rng);
  }
  return out;
}

/// Each group is its matched factor in the first column plus independent noise columns.
LatentTable matched_latents(const std::vector<FactorRecord>& f, double factor_weight,
                            std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(f.size());
  LatentTable t;
  Matrix* groups[] = {&t.f_s, &t.f_g, &t.f_sg, &t.z_summary};
  for (int g = 0; g < 4; ++g) {
    groups[g]->resize(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double values[] = {f[i].spatial_factor_p, f[i].graph_factor_b, f[i].joint_factor_s,
                               f[i].time_slope};
      (*groups[g])(i, 0) = factor_weight * values[g] + 1e-3 * noise(rng);
      (*groups[g])(i, 1) = 1e-3 * noise(rng);
      (*groups[g])(i, 2) = 1e-3 * noise(rng);
    }
  }
  return t;
}

}  // namespace

TEST(ReconstructionMetrics, IdentityStubIsPerfect) {
  auto data = sequences(5, 8, 3, 1);
  auto m = reconstruction_metrics([](const SpatiotemporalGraph& g) { return g; }, data);
  EXPECT_EQ(m.node_mse, 0.0);
  EXPECT_EQ(m.spatial_mse, 0.0);
  EXPECT_EQ(m.edge_accuracy, 1.0);
}

TEST(ReconstructionMetrics, EmptyPredictorScoresOneMinusDensity) {
  auto data = sequences(6, 9, 2, 2);
  double edges = 0, pairs = 0;
  for (const auto& g : data) {
    for (const auto& s : g.snapshots) {
      edges += s.adjacency.sum() / 2;
      pairs += 9.0 * 8 / 2;
    }
  }
  ASSERT_GT(edges, 0);
  auto m = reconstruction_metrics(
      [](const SpatiotemporalGraph& g) {
        auto out = g;
        for (auto& s : out.snapshots) s.adjacency.setZero();
        return out;
      },
      data);
  EXPECT_NEAR(m.edge_accuracy, 1.0 - edges / pairs, 1e-12);
}

TEST(ReconstructionMetrics, CoordinateOffset) {
  auto data = sequences(3, 6, 2, 3);
  auto m = reconstruction_metrics(
      [](const SpatiotemporalGraph& g) {
        auto out = g;
        for (auto& s : out.snapshots) s.coords.array() += 0.1;
        return out;
      },
      data);
  EXPECT_NEAR(m.spatial_mse, 0.01, 1e-12);
  EXPECT_EQ(m.node_mse, 0.0);
}

TEST(PropertyKld, IdenticalSetsAreNearZero) {
  auto data = sequences(20, 10, 3, 4);
  for (Property p : kAllProperties) EXPECT_LE(property_kld(data, data, p), 1e-4) << to_string(p);
}

TEST(PropertyKld, DisjointSupportIsLargeButFinite) {
  std::vector<double> ones(50, 1.0), zeros(50, 0.0);
  const double kl = histogram_kld(property_histograms(ones, zeros, 20));
  EXPECT_TRUE(std::isfinite(kl));
  EXPECT_GT(kl, 10.0);
  EXPECT_NEAR(kl, std::log((1 + 1e-6) / 1e-6), 1e-3);
}

TEST(PropertyKld, InvariantToSetOrderAndNodeLabels) {
  auto a = sequences(15, 10, 2, 5), b = sequences(15, 10, 2, 50);
  auto reordered = b;
  std::reverse(reordered.begin(), reordered.end());
  auto relabeled = b;
  for (auto& g : relabeled) g = stgd::testing::permute_nodes(g, {3, 7, 1, 0, 9, 2, 8, 5, 6, 4});
  for (Property p : kAllProperties) {
    const double base = property_kld(a, b, p);
    EXPECT_DOUBLE_EQ(property_kld(a, reordered, p), base) << to_string(p);
    EXPECT_NEAR(property_kld(a, relabeled, p), base, 1e-12) << to_string(p);
  }
}

TEST(PropertyKld, SameGeneratorCloserThanDisjointRanges) {
  data::WaxmanParams near;
  near.n_nodes = 12;
  near.seq_len = 2;
  near.beta = 0.9;
  near.alpha = 0.3;
  data::WaxmanParams far = near;
  far.alpha = 2.0;
  std::vector<SpatiotemporalGraph> ref, same, other;
  for (int i = 0; i < 150; ++i) {
    ref.push_back(data::generate_sequence(near, 1000 + i));
    same.push_back(data::generate_sequence(near, 5000 + i));
    other.push_back(data::generate_sequence(far, 9000 + i));
  }
  EXPECT_LT(property_kld(same, ref, Property::Density), property_kld(other, ref, Property::Density));
  EXPECT_LT(property_kld(same, ref, Property::Clustering),
            property_kld(other, ref, Property::Clustering));
}

TEST(MutualInformation, Examples) {
  std::vector<int> a{0, 1, 2, 3, 0, 1, 2, 3}, b{0, 0, 1, 1, 0, 0, 1, 1};
  EXPECT_NEAR(mutual_information(a, a), std::log(4.0), 1e-12);
  EXPECT_NEAR(mutual_information(a, b), std::log(2.0), 1e-12);
  std::vector<int> c{0, 1, 0, 1, 0, 1, 0, 1};
  EXPECT_NEAR(mutual_information(b, c), 0.0, 1e-12);
  EXPECT_NEAR(entropy(b), std::log(2.0), 1e-12);
}

TEST(MutualInformation, QuantileBinsKeepTiesTogether) {
  Vector constant = Vector::Constant(40, 3.0);
  auto bins = quantile_bins(constant, 20);
  EXPECT_TRUE(std::all_of(bins.begin(), bins.end(), [&](int b) { return b == bins[0]; }));
  Vector ramp = Vector::LinSpaced(40, 0, 1);
  bins = quantile_bins(ramp, 20);
  for (int i = 0; i < 40; ++i) EXPECT_EQ(bins[i], i / 2);
}

TEST(MutualInformation, PrincipalProjectionFollowsDominantAxis) {
  Matrix x(4, 2);
  x << 0, 0, 1, 0.01, 2, -0.01, 3, 0;
  Vector p = principal_projection(x);
  EXPECT_NEAR(std::abs(p(3) - p(0)), 3.0, 1e-3);
}

TEST(AvgMi, OracleLatentsScoreNearZero) {
  std::mt19937_64 rng(1);
  auto f = random_factors(500, rng);
  auto r = avg_mi(matched_latents(f, 1.0, rng), f);
  EXPECT_LT(r.avg_mi, 0.02);
  for (int g = 0; g < 4; ++g) EXPECT_GT(r.matrix(g, g), 0.85);
}

TEST(AvgMi, ConstantLatentsScoreQuarter) {
  std::mt19937_64 rng(2);
  auto f = random_factors(200, rng);
  LatentTable t;
  t.f_s = t.f_g = t.f_sg = t.z_summary = Matrix::Constant(200, 3, 1.5);
  EXPECT_DOUBLE_EQ(avg_mi(t, f).avg_mi, 0.25);
}

TEST(AvgMi, NoiseLatentsScoreNearQuarter) {
  std::mt19937_64 rng(3);
  auto f = random_factors(500, rng);
  auto r = avg_mi(matched_latents(f, 0.0, rng), f);
  EXPECT_GE(r.avg_mi, 0.2);
  EXPECT_LE(r.avg_mi, 0.3);
}

TEST(AvgMi, ZeroEntropyFactorExcluded) {
  std::mt19937_64 rng(4);
  auto f = random_factors(300, rng);
  for (auto& x : f) x.time_slope = 2;
  auto r = avg_mi(matched_latents(f, 1.0, rng), f);
  EXPECT_EQ(r.warnings.size(), 1u);
  EXPECT_TRUE(std::isnan(r.matrix(0, 3)));
  EXPECT_LT(r.avg_mi, 0.02);
}

TEST(AvgMi, RejectsTooFewSequences) {
  std::mt19937_64 rng(5);
  auto f = random_factors(50, rng);
  EXPECT_THROW(avg_mi(matched_latents(f, 1.0, rng), f), UndefinedInputError);
}

class TraversalTest : public ::testing::TestWithParam<model::Variant> {};

TEST_P(TraversalTest, MeanValueTraversalReconstructs) {
  model::StgdVae vae(stgd::testing::tiny_config(6, GetParam(), 5));
  auto base = stgd::testing::small_sequence(6, 3, 7);
  const double mean = vae.encode(base).f_g.mean(1);
  auto out = latent_traversal(vae, base, LatentGroup::FG, 1, {mean});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0], mean_reconstructor(vae)(base));
  EXPECT_EQ(latent_traversal(vae, base, LatentGroup::Z, 0, default_traversal_values()).size(), 11u);
  EXPECT_THROW(latent_traversal(vae, base, LatentGroup::FSG, 5, {0.0}), ConfigError);
  EXPECT_THROW(latent_traversal(vae, base, LatentGroup::FS, -1, {0.0}), ConfigError);
}

TEST_P(TraversalTest, ExclusiveGroupsLeaveOtherDecoderInputsBitIdentical) {
  if (GetParam() == model::Variant::Pooled) GTEST_SKIP() << "pooled decoders share one input";
  model::StgdVae vae(stgd::testing::tiny_config(6, GetParam(), 6));
  auto base = stgd::testing::small_sequence(6, 3, 8);
  auto fs = traversal_latents(vae, base, LatentGroup::FS, 2, default_traversal_values());
  auto fg = traversal_latents(vae, base, LatentGroup::FG, 0, default_traversal_values());
  const auto graph_ref = vae.decoder_inputs(fs.front()).graph;
  const auto spatial_ref = vae.decoder_inputs(fg.front()).spatial;
  for (std::size_t k = 1; k < fs.size(); ++k) {
    EXPECT_EQ(vae.decoder_inputs(fs[k]).graph, graph_ref);
    EXPECT_NE(vae.decoder_inputs(fs[k]).spatial, vae.decoder_inputs(fs.front()).spatial);
    EXPECT_EQ(vae.decoder_inputs(fg[k]).spatial, spatial_ref);
  }
}

INSTANTIATE_TEST_SUITE_P(Variants, TraversalTest,
                         ::testing::Values(model::Variant::Indep, model::Variant::Dep,
                                           model::Variant::Pooled),
                         [](const auto& info) { return model::to_string(info.param); });

TEST(PriorGeneration, BinarySymmetricAndSeeded) {
  for (auto v : {model::Variant::Indep, model::Variant::Dep, model::Variant::Pooled}) {
    model::StgdVae vae(stgd::testing::tiny_config(6, v, 7));
    auto a = generate_from_prior(vae, 4, 3, 11);
    ASSERT_EQ(a.size(), 4u);
    for (const auto& g : a) {
      ASSERT_EQ(g.length(), 3u);
      EXPECT_TRUE(validate_graph(g));
      for (const auto& s : g.snapshots) {
        EXPECT_TRUE((s.adjacency.array() == 0.0 || s.adjacency.array() == 1.0).all());
      }
    }
    EXPECT_EQ(generate_from_prior(vae, 4, 3, 11), a);
    EXPECT_NE(generate_from_prior(vae, 4, 3, 12), a);
  }
}

TEST(PriorGeneration, ZIsCopiedAcrossStepsExceptForDep) {
  std::mt19937_64 rng(3);
  model::StgdVae indep(stgd::testing::tiny_config(6, model::Variant::Indep, 7));
  auto s = sample_prior(indep, 4, rng);
  ASSERT_EQ(s.z.size(), 4u);
  for (const auto& z : s.z) EXPECT_EQ(z, s.z.front());
  model::StgdVae dep(stgd::testing::tiny_config(6, model::Variant::Dep, 7));
  auto d = sample_prior(dep, 4, rng);
  EXPECT_NE(d.z[1], d.z[0]);
  dep.set_standard_prior(true);
  EXPECT_NE(sample_prior(dep, 2, rng).z[1], d.z[0]);
}

TEST(PriorGeneration, SharedUniformsKeepStableEdgesStable) {
  model::StgdVae vae(stgd::testing::tiny_config(6, model::Variant::Indep, 8));
  // The same latents at every step give every step the same probabilities.
  for (const auto& g : generate_from_prior(vae, 3, 4, 5)) {
    for (const auto& s : g.snapshots) EXPECT_EQ(s.adjacency, g.snapshots[0].adjacency);
  }
}

TEST(Report, JsonHasEveryColumn) {
  MetricReport r;
  r.edge_accuracy = 0.7;
  auto j = r.to_json();
  for (const char* key : {"node_mse", "spatial_mse", "edge_accuracy", "kld_cls", "kld_ds",
                          "kld_bet", "kld_tcorr", "avg_mi"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_TRUE(j["node_mse"].is_null());
  EXPECT_EQ(j["edge_accuracy"], 0.7);
  EXPECT_NE(r.to_table().find("n/a"), std::string::npos);
}

TEST(Plots, SvgOutputsAreWellFormed) {
  auto h = property_histograms({0.1, 0.2, 0.2, 0.3}, {0.0, 0.25}, 5);
  auto svg = histogram_svg("density <test>", h);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("&lt;test&gt;"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  auto seq = sequence_svg("seq", stgd::testing::small_sequence(6, 2, 1));
  EXPECT_NE(seq.find("<circle"), std::string::npos);
}
