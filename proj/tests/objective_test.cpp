#include "stgd/objective/objective.hpp"

#include "stgd/core/errors.hpp"

#include "support/fixtures.hpp"
#include "support/kl_oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace stgd;
using namespace stgd::objective;
using stgd::testing::monte_carlo_kl;

namespace {

GaussianParams gaussian(std::initializer_list<double> m, std::initializer_list<double> lv) {
  GaussianParams g{Vector(static_cast<Eigen::Index>(m.size())),
                   Vector(static_cast<Eigen::Index>(lv.size()))};
  std::copy(m.begin(), m.end(), g.mean.data());
  std::copy(lv.begin(), lv.end(), g.log_var.data());
  return g;
}

GaussianParams standard(Eigen::Index d) { return {Vector::Zero(d), Vector::Zero(d)}; }

/// Decoded values equal to the target with saturated logits.
std::vector<DecodedSnapshot> perfect_decode(const SpatiotemporalGraph& g, double logit) {
  std::vector<DecodedSnapshot> out;
  for (const Snapshot& s : g.snapshots) {
    DecodedSnapshot d;
    d.coords = s.coords;
    d.node_features = s.node_features;
    d.edge_logits = (2.0 * s.adjacency.array() - 1.0).matrix() * logit;
    out.push_back(d);
  }
  return out;
}

LatentPosterior standard_posterior(Eigen::Index steps) {
  LatentPosterior q{standard(3), standard(2), standard(4), {}};
  for (Eigen::Index t = 0; t < steps; ++t) q.z.push_back(standard(5));
  return q;
}

}  // namespace

TEST(GaussianKl, ZeroForIdenticalDistributions) {
  EXPECT_EQ(gaussian_kl_to_standard(standard(7)), 0.0);
  auto q = gaussian({0.3, -1.2}, {0.4, -2.0});
  EXPECT_NEAR(gaussian_kl_conditional(q, q), 0.0, 1e-15);
}

TEST(GaussianKl, StandardMatchesMonteCarlo) {
  for (auto q : {gaussian({1.0, 0.0}, {0.0, std::log(2.0)}), gaussian({-0.5, 2.0, 0.1}, {-1.0, 0.5, 0.0})}) {
    auto [mc, se] = monte_carlo_kl(q, standard(q.mean.size()), 1'000'000, 11);
    EXPECT_NEAR(gaussian_kl_to_standard(q), mc, 5 * se);
  }
}

TEST(GaussianKl, ConditionalMatchesMonteCarlo) {
  auto q = gaussian({0.2, -0.7, 1.5}, {-0.3, 0.8, 0.0});
  auto p = gaussian({-0.4, 0.1, 1.0}, {0.5, -0.2, 0.3});
  auto [mc, se] = monte_carlo_kl(q, p, 1'000'000, 12);
  EXPECT_NEAR(gaussian_kl_conditional(q, p), mc, 5 * se);
}

TEST(GaussianKl, ConditionalAgainstStandardPriorReducesToStandard) {
  auto q = gaussian({0.2, -0.7, 1.5}, {-0.3, 0.8, 0.0});
  EXPECT_NEAR(gaussian_kl_conditional(q, standard(3)), gaussian_kl_to_standard(q), 1e-14);
}

TEST(GaussianKl, RejectsMismatchedShapes) {
  EXPECT_THROW(gaussian_kl_conditional(standard(2), standard(3)), ShapeError);
}

TEST(Reconstruction, ZeroLogitsCostLn2PerPair) {
  auto g = stgd::testing::small_sequence(7, 3, 5);
  auto decoded = perfect_decode(g, 0.0);
  const double pairs = 3.0 * 7 * 6 / 2;
  auto r = reconstruction_loss(decoded, g);
  EXPECT_NEAR(r.graph, pairs * std::log(2.0), 1e-10);
  EXPECT_EQ(r.spatial, 0.0);
}

TEST(Reconstruction, GaussianTermsScaleWithSigma) {
  auto g = stgd::testing::small_sequence(6, 2, 6);
  auto decoded = perfect_decode(g, 40.0);
  const double delta = 0.3;
  for (auto& d : decoded) {
    d.node_features.array() += delta;
    d.coords.array() -= delta;
  }
  const double entries_f = 2.0 * 6 * 2, entries_c = 2.0 * 6 * 2;
  auto r = reconstruction_loss(decoded, g);
  const double edge_part = 2.0 * 15 * std::log1p(std::exp(-40.0));
  EXPECT_NEAR(r.graph, edge_part + entries_f * delta * delta / 2, 1e-12);
  EXPECT_NEAR(r.spatial, entries_c * delta * delta / 2, 1e-12);
  auto s = reconstruction_loss(decoded, g, {0.1, 2.0});
  EXPECT_NEAR(s.spatial, entries_c * delta * delta / (2 * 0.01), 1e-10);
  EXPECT_NEAR(s.graph, edge_part + entries_f * delta * delta / 8, 1e-12);
}

TEST(Reconstruction, SaturatedLogitsStayFinite) {
  auto g = stgd::testing::small_sequence(6, 2, 7);
  auto right = reconstruction_loss(perfect_decode(g, 800.0), g);
  EXPECT_EQ(right.graph, 0.0);
  auto wrong = reconstruction_loss(perfect_decode(g, -40.0), g);
  EXPECT_NEAR(wrong.graph, 2.0 * 15 * (40.0 + std::log1p(std::exp(-40.0))), 1e-9);
  EXPECT_TRUE(std::isfinite(reconstruction_loss(perfect_decode(g, -800.0), g).graph));
}

TEST(Reconstruction, RejectsShapeMismatch) {
  auto g = stgd::testing::small_sequence(6, 2, 7);
  auto decoded = perfect_decode(g, 1.0);
  decoded.pop_back();
  EXPECT_THROW(reconstruction_loss(decoded, g), ShapeError);
}

TEST(Objective, PerfectFitAtPriorGivesNegativeThresholds) {
  auto g = stgd::testing::small_sequence(6, 3, 8);
  Thresholds th;
  th.I_t = 0.7;
  th.I_sg = 0.4;
  auto b = total_objective(standard_posterior(3), perfect_decode(g, 800.0), g, th);
  EXPECT_NEAR(b.total, -0.7 - 0.4, 1e-12);
  EXPECT_NEAR(b.r2, -0.7, 1e-12);
  EXPECT_NEAR(b.r3, -0.4, 1e-12);
}

TEST(Objective, WeightedTermsExample) {
  LossBreakdown b;
  b.recon_graph = 10;
  b.recon_spatial = 1;
  b.kl_s = 2;
  b.kl_g = 3;
  b.kl_t = 5;
  b.kl_sg = 1;
  Thresholds th;
  th.I_t = 4;
  th.I_sg = 1.5;
  th.betas = {2.0, 0.5, 2.0, 3.0};
  finish_breakdown(b, th);
  EXPECT_DOUBLE_EQ(b.r1, 0.5 * 2 + 2.0 * 3);
  EXPECT_DOUBLE_EQ(b.r2, 2.0 * (5 - 4));
  EXPECT_DOUBLE_EQ(b.r3, 3.0 * (1 - 1.5));
  EXPECT_DOUBLE_EQ(b.total, 11 + 7 + 2 - 1.5);
}

TEST(Objective, DepPriorMatchingPosteriorLeavesOnlyFirstStep) {
  auto g = stgd::testing::small_sequence(6, 4, 9);
  LatentPosterior q = standard_posterior(4);
  for (auto& z : q.z) z = gaussian({0.3, -0.1, 0.2, 1.0, 0.0}, {0.1, 0.2, -0.3, 0.0, 0.5});
  std::vector<GaussianParams> prior(q.z.begin(), q.z.end());
  prior[0] = gaussian({9, 9, 9, 9, 9}, {3, 3, 3, 3, 3});  // ignored at t = 0
  auto b = total_objective(q, perfect_decode(g, 800.0), g, Thresholds{}, prior);
  EXPECT_NEAR(b.kl_t, gaussian_kl_to_standard(q.z[0]), 1e-12);
  auto indep = total_objective(q, perfect_decode(g, 800.0), g, Thresholds{});
  EXPECT_NEAR(indep.kl_t, 4 * gaussian_kl_to_standard(q.z[0]), 1e-12);
}

class TapeObjectiveTest : public ::testing::TestWithParam<model::Variant> {};

TEST_P(TapeObjectiveTest, BatchValuesMatchPerSequenceValueObjective) {
  auto mc = stgd::testing::tiny_config(6, GetParam(), 21);
  mc.coord_sigma = 0.5;
  mc.feature_sigma = 2.0;
  model::StgdVae vae(mc);
  auto a = stgd::testing::small_sequence(6, 3, 31);
  auto c = stgd::testing::small_sequence(6, 3, 32);
  const SpatiotemporalGraph* seqs[] = {&a, &c};
  Thresholds th;
  th.I_t = 0.3;
  th.I_sg = 0.2;
  th.betas = {1.5, 0.7, 1.1, 0.9};

  nn::Tape tape;
  auto batch = model::Batch::build(seqs);
  auto fp = vae.forward(tape, batch, model::NoiseDraw::zeros(mc, 2, 3));
  TapeObjective obj = build_objective(fp, batch, mc, th);

  LossBreakdown expected;
  for (const SpatiotemporalGraph* g : seqs) {
    auto q = vae.encode(*g);
    auto means = model::posterior_means(q);
    std::optional<std::vector<GaussianParams>> prior;
    if (GetParam() == model::Variant::Dep) {
      prior.emplace();
      for (std::size_t t = 0; t < q.z.size(); ++t) {
        prior->push_back(t == 0 ? standard(mc.z_dim) : vae.transition_prior(q.z[t - 1].mean));
      }
    }
    expected += total_objective(q, vae.decode(means), *g, th, prior,
                                {mc.coord_sigma, mc.feature_sigma});
  }
  expected *= 0.5;
  const LossBreakdown& v = obj.values;
  EXPECT_NEAR(v.recon_graph, expected.recon_graph, 1e-9 * std::abs(expected.recon_graph));
  EXPECT_NEAR(v.recon_spatial, expected.recon_spatial, 1e-9 * std::abs(expected.recon_spatial));
  EXPECT_NEAR(v.kl_s, expected.kl_s, 1e-9);
  EXPECT_NEAR(v.kl_g, expected.kl_g, 1e-9);
  EXPECT_NEAR(v.kl_sg, expected.kl_sg, 1e-9);
  EXPECT_NEAR(v.kl_t, expected.kl_t, 1e-9);
  EXPECT_NEAR(v.total, expected.total, 1e-9 * std::abs(expected.total));
  EXPECT_NEAR(obj.loss.scalar(), v.total, 1e-9 * std::abs(v.total));
}

INSTANTIATE_TEST_SUITE_P(Variants, TapeObjectiveTest,
                         ::testing::Values(model::Variant::Indep, model::Variant::Dep,
                                           model::Variant::Pooled),
                         [](const auto& info) { return model::to_string(info.param); });
