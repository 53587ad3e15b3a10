#include "stgd/core/errors.hpp"
#include "stgd/model/model.hpp"
#include "stgd/objective/objective.hpp"

#include "support/fixtures.hpp"
#include "support/gradcheck.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace stgd;
using namespace stgd::model;
using stgd::testing::random_matrix;

namespace {

GraphContext context_of(const Matrix& adjacency, const Matrix& coords) {
  const Matrix a[] = {adjacency};
  const Matrix c[] = {coords};
  return GraphContext::build(a, c);
}

Matrix path_adjacency(Eigen::Index n) {
  Matrix a = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) a(i, i + 1) = a(i + 1, i) = 1;
  return a;
}

bool all_finite(const GaussianParams& g) { return g.mean.allFinite() && g.log_var.allFinite(); }

}  // namespace

TEST(GcnLayer, EmptyGraphWithIdentityWeightIsRelu) {
  ParameterStore store;
  std::mt19937_64 rng(1);
  GcnLayer layer(store, "g", 3, 3, rng);
  store.find("g.weight")->value = Matrix::Identity(3, 3);
  Matrix h = random_matrix(4, 3, rng);
  nn::Tape tape;
  Matrix out = layer(tape.constant(h), context_of(Matrix::Zero(4, 4), Matrix::Zero(4, 2))).value();
  EXPECT_TRUE(out.isApprox(h.cwiseMax(0.0)));
}

TEST(GcnLayer, TwoConnectedNodesAverage) {
  ParameterStore store;
  std::mt19937_64 rng(1);
  GcnLayer layer(store, "g", 2, 2, rng);
  store.find("g.weight")->value = Matrix::Identity(2, 2);
  nn::Tape tape;
  Matrix out = layer(tape.constant(Matrix::Identity(2, 2)),
                     context_of(path_adjacency(2), Matrix::Zero(2, 2)))
                   .value();
  EXPECT_TRUE(out.isApprox(Matrix::Constant(2, 2, 0.5), 1e-12));
}

TEST(GcnLayer, PermutationEquivariant) {
  ParameterStore store;
  std::mt19937_64 rng(2);
  GcnLayer layer(store, "g", 3, 4, rng);
  Matrix a = path_adjacency(5);
  a(0, 4) = a(4, 0) = 1;
  a(1, 3) = a(3, 1) = 1;
  Matrix h = random_matrix(5, 3, rng);
  const std::vector<int> perm = {2, 0, 4, 1, 3};
  Eigen::PermutationMatrix<Eigen::Dynamic> p(5);
  for (int i = 0; i < 5; ++i) p.indices()[i] = perm[i];
  nn::Tape tape;
  Matrix out = layer(tape.constant(h), context_of(a, Matrix::Zero(5, 2))).value();
  Matrix pa = p * a * p.transpose();
  Matrix ph = p * h;
  Matrix pout = layer(tape.constant(ph), context_of(pa, Matrix::Zero(5, 2))).value();
  EXPECT_TRUE(pout.isApprox(p * out, 1e-12));
}

TEST(SmpnnLayer, NoEdgesMeansNoMessages) {
  ParameterStore store;
  std::mt19937_64 rng(3);
  SmpnnLayer layer(store, "s", 2, 4, rng);
  Matrix h = random_matrix(3, 2, rng);
  nn::Tape tape;
  Matrix out = layer(tape.constant(h), context_of(Matrix::Zero(3, 3), random_matrix(3, 2, rng))).value();
  Matrix expected = (h * store.find("s.psi.h")->value).rowwise() +
                    store.find("s.psi.bias")->value.row(0);
  EXPECT_TRUE(out.isApprox(expected.cwiseMax(0.0), 1e-12));
}

TEST(SmpnnLayer, MatchesPerNodeMessageDefinition) {
  ParameterStore store;
  std::mt19937_64 rng(4);
  SmpnnLayer layer(store, "s", 2, 3, rng);
  for (auto& p : store.items()) p->value = random_matrix(p->value.rows(), p->value.cols(), rng);
  const Eigen::Index n = 4;
  Matrix a = path_adjacency(n);
  a(0, 2) = a(2, 0) = 0.5;
  Matrix c = random_matrix(n, 2, rng), h = random_matrix(n, 2, rng);
  nn::Tape tape;
  Matrix out = layer(tape.constant(h), context_of(a, c)).value();
  const Matrix& ph = store.find("s.phi.h")->value;
  const Matrix& pd = store.find("s.phi.d")->value;
  const Matrix& pb = store.find("s.phi.bias")->value;
  for (Eigen::Index i = 0; i < n; ++i) {
    Matrix m = Matrix::Zero(1, 3);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d = (c.row(i) - c.row(j)).norm();
      m += a(i, j) * (h.row(j) * ph + d * pd + pb);
    }
    m /= static_cast<double>(n - 1);
    Matrix pre = h.row(i) * store.find("s.psi.h")->value + m * store.find("s.psi.m")->value +
                 store.find("s.psi.bias")->value;
    EXPECT_TRUE(out.row(i).isApprox(pre.cwiseMax(0.0), 1e-12));
  }
}

TEST(SmpnnLayer, TranslationInvariant) {
  ParameterStore store;
  std::mt19937_64 rng(5);
  SmpnnLayer layer(store, "s", 2, 4, rng);
  Matrix a = path_adjacency(5);
  Matrix c = random_matrix(5, 2, rng), h = random_matrix(5, 2, rng);
  Matrix shifted = c.rowwise() + Eigen::RowVector2d(3.5, -1.25);
  nn::Tape tape;
  EXPECT_TRUE(layer(tape.constant(h), context_of(a, c))
                  .value()
                  .isApprox(layer(tape.constant(h), context_of(a, shifted)).value(), 1e-12));
}

TEST(SmpnnLayer, OperationCountGrowsQuadratically) {
  ParameterStore store;
  std::mt19937_64 rng(6);
  SmpnnLayer layer(store, "s", 4, 8, rng);
  auto macs = [&](Eigen::Index n) {
    Matrix a = Matrix::Ones(n, n) - Matrix::Identity(n, n);
    auto ctx = context_of(a, random_matrix(n, 2, rng));
    nn::Tape tape;
    Var h = tape.constant(random_matrix(n, 4, rng));
    nn::mac_counter() = 0;
    layer(h, ctx);
    return static_cast<double>(nn::mac_counter());
  };
  const double r1 = macs(400) / macs(200);
  const double r2 = macs(800) / macs(400);
  EXPECT_GT(r1, 3.0);
  EXPECT_LT(r1, 4.5);
  EXPECT_GT(r2, 3.0);
  EXPECT_LT(r2, 4.5);
}

TEST(NodeToEdge, SymmetricAndConstantOnZeroInput) {
  ParameterStore store;
  std::mt19937_64 rng(7);
  NodeToEdge layer(store, "e", 3, 2, rng);
  store.find("e.bias")->value << 0.3, -0.2;
  nn::Tape tape;
  Matrix out = layer(tape.constant(random_matrix(4, 3, rng)), 4).value();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) EXPECT_EQ(out.row(i * 4 + j), out.row(j * 4 + i));
  }
  Matrix zero = layer(tape.constant(Matrix::Zero(4, 3)), 4).value();
  for (Eigen::Index r = 0; r < zero.rows(); ++r) {
    EXPECT_DOUBLE_EQ(zero(r, 0), 0.3);
    EXPECT_DOUBLE_EQ(zero(r, 1), 0.0);
  }
}

TEST(NodeToEdge, PermutesBothAxes) {
  ParameterStore store;
  std::mt19937_64 rng(8);
  NodeToEdge layer(store, "e", 3, 2, rng);
  Matrix h = random_matrix(4, 3, rng);
  const int perm[] = {3, 1, 0, 2};
  Matrix ph(4, 3);
  for (int i = 0; i < 4; ++i) ph.row(perm[i]) = h.row(i);
  nn::Tape tape;
  Matrix out = layer(tape.constant(h), 4).value();
  Matrix pout = layer(tape.constant(ph), 4).value();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) EXPECT_EQ(pout.row(perm[i] * 4 + perm[j]), out.row(i * 4 + j));
  }
}

TEST(Reparameterize, Examples) {
  GaussianParams g{Vector::Constant(3, 2.0), Vector::Constant(3, -40.0)};
  EXPECT_TRUE(reparameterize(g, Vector::Constant(3, 1.0)).isApprox(g.mean, 1e-8));
  g.log_var.setConstant(0.7);
  EXPECT_EQ(reparameterize(g, Vector::Zero(3)), g.mean);
  GaussianParams unit{Vector::Zero(1), Vector::Zero(1)};
  EXPECT_DOUBLE_EQ(reparameterize(unit, Vector::Constant(1, 1.5))(0), 1.5);
}

class EncoderTest : public ::testing::Test {
 protected:
  StgdVae model{ModelConfig{}};
  SpatiotemporalGraph seq = stgd::testing::small_sequence(25, 8, 11);
};

TEST_F(EncoderTest, LatentDimensions) {
  LatentPosterior q = model.encode(seq);
  EXPECT_EQ(q.f_s.mean.size(), 100);
  EXPECT_EQ(q.f_s.log_var.size(), 100);
  EXPECT_EQ(q.f_g.mean.size(), 100);
  EXPECT_EQ(q.f_sg.mean.size(), 200);
  EXPECT_EQ(q.f_sg.log_var.size(), 200);
  ASSERT_EQ(q.z.size(), 8u);
  for (const auto& z : q.z) EXPECT_EQ(z.mean.size(), 200);
}

TEST_F(EncoderTest, Deterministic) {
  LatentPosterior a = model.encode(seq), b = model.encode(seq);
  EXPECT_EQ(a.f_s, b.f_s);
  EXPECT_EQ(a.f_g, b.f_g);
  EXPECT_EQ(a.f_sg, b.f_sg);
  EXPECT_EQ(a.z, b.z);
}

TEST_F(EncoderTest, SpatialEncoderIgnoresStepOrder) {
  SpatiotemporalGraph rev = seq;
  std::reverse(rev.snapshots.begin(), rev.snapshots.end());
  EXPECT_TRUE(model.encode_spatial(rev).mean.isApprox(model.encode_spatial(seq).mean, 1e-12));
}

TEST_F(EncoderTest, NodePermutationInvariance) {
  std::vector<int> perm(25);
  for (int i = 0; i < 25; ++i) perm[i] = (i * 7 + 3) % 25;
  SpatiotemporalGraph p = stgd::testing::permute_nodes(seq, perm);
  LatentPosterior a = model.encode(seq), b = model.encode(p);
  EXPECT_LT((a.f_g.mean - b.f_g.mean).cwiseAbs().maxCoeff(), 1e-5);
  EXPECT_LT((a.f_g.log_var - b.f_g.log_var).cwiseAbs().maxCoeff(), 1e-5);
  EXPECT_LT((a.f_sg.mean - b.f_sg.mean).cwiseAbs().maxCoeff(), 1e-5);
  for (std::size_t t = 0; t < a.z.size(); ++t) {
    EXPECT_LT((a.z[t].mean - b.z[t].mean).cwiseAbs().maxCoeff(), 1e-5);
  }
}

TEST_F(EncoderTest, EmptyGraphsAreFinite) {
  SpatiotemporalGraph empty = seq;
  for (auto& s : empty.snapshots) s.adjacency.setZero();
  LatentPosterior q = model.encode(empty);
  EXPECT_TRUE(all_finite(q.f_g));
  EXPECT_TRUE(all_finite(q.f_sg));
  for (const auto& z : q.z) EXPECT_TRUE(all_finite(z));
}

TEST_F(EncoderTest, IdenticalSnapshotsGiveIdenticalStepPosteriors) {
  SpatiotemporalGraph g = seq;
  g.snapshots[1] = g.snapshots[0];
  auto z = model.encode_time(g);
  EXPECT_EQ(z[0], z[1]);
}

TEST(DepEncoder, PreviousLatentConditionsFirstStep) {
  ModelConfig c;
  c.variant = Variant::Dep;
  StgdVae model(c);
  auto seq = stgd::testing::small_sequence(25, 3, 4);
  const Vector zero = Vector::Zero(200);
  const Vector ones = Vector::Ones(200);
  auto a = model.encode_time(seq, &zero);
  auto b = model.encode_time(seq, &ones);
  EXPECT_EQ(a[0], model.encode(seq).z[0]);
  EXPECT_GT((a[0].mean - b[0].mean).norm(), 1e-6);
}

TEST(SpatialEncoder, RejectsFewerNodesThanKernel) {
  ModelConfig c;
  c.nodes = 4;
  EXPECT_THROW(StgdVae{c}, stgd::ConfigError);
}

TEST(Decoders, ShapesSymmetryAndMask) {
  StgdVae model{ModelConfig{}};
  LatentSample s{Vector::Random(100), Vector::Random(100), Vector::Random(200),
                 {Vector::Random(200), Vector::Random(200)}};
  auto out = model.decode(s);
  ASSERT_EQ(out.size(), 2u);
  for (const auto& d : out) {
    EXPECT_EQ(d.coords.rows(), 25);
    EXPECT_EQ(d.coords.cols(), 2);
    EXPECT_EQ(d.node_features.rows(), 25);
    EXPECT_EQ(d.node_features.cols(), 2);
    ASSERT_EQ(d.edge_logits.rows(), 25);
    for (int i = 0; i < 25; ++i) {
      EXPECT_TRUE(std::isinf(d.edge_logits(i, i)) && d.edge_logits(i, i) < 0);
      for (int j = 0; j < 25; ++j) {
        if (i != j) EXPECT_EQ(d.edge_logits(i, j), d.edge_logits(j, i));
      }
    }
  }
  auto again = model.decode(s);
  EXPECT_EQ(again[1].coords, out[1].coords);
  EXPECT_EQ(again[1].node_features, out[1].node_features);
}

TEST(Decoders, ZeroLatentsGiveFiniteOutput) {
  StgdVae model{ModelConfig{}};
  LatentSample s{Vector::Zero(100), Vector::Zero(100), Vector::Zero(200), {Vector::Zero(200)}};
  auto d = model.decode(s).front();
  EXPECT_TRUE(d.coords.allFinite());
  EXPECT_TRUE(d.node_features.allFinite());
}

TEST(Decoders, ExclusiveFactorsRouteToOneDecoder) {
  StgdVae model{ModelConfig{}};
  LatentSample s{Vector::Random(100), Vector::Random(100), Vector::Random(200), {Vector::Random(200)}};
  LatentSample fs = s, fg = s;
  fs.f_s.array() += 3.0;
  fg.f_g.array() += 3.0;
  EXPECT_EQ(model.decoder_inputs(fs).graph, model.decoder_inputs(s).graph);
  EXPECT_NE(model.decoder_inputs(fs).spatial, model.decoder_inputs(s).spatial);
  EXPECT_EQ(model.decoder_inputs(fg).spatial, model.decoder_inputs(s).spatial);
  EXPECT_NE(model.decoder_inputs(fg).graph, model.decoder_inputs(s).graph);
}

TEST(Model, BatchedForwardMatchesSingleSequences) {
  StgdVae model(stgd::testing::tiny_config(6, Variant::Dep));
  auto a = stgd::testing::small_sequence(6, 3, 1), b = stgd::testing::small_sequence(6, 3, 2);
  const SpatiotemporalGraph* both[] = {&a, &b};
  nn::Tape tape;
  ForwardPass fp = model.forward(tape, Batch::build(both), NoiseDraw::zeros(model.config(), 2, 3));
  LatentPosterior qb = model.encode(b);
  EXPECT_TRUE(fp.f_sg.mean.value().row(1).transpose().isApprox(qb.f_sg.mean, 1e-12));
  for (int t = 0; t < 3; ++t) {
    EXPECT_TRUE(fp.z.mean.value().row(3 + t).transpose().isApprox(qb.z[t].mean, 1e-12));
  }
}

TEST(Model, EndToEndDeterministicGivenNoise) {
  StgdVae model(stgd::testing::tiny_config(6, Variant::Indep));
  auto seq = stgd::testing::small_sequence(6, 3, 5);
  std::mt19937_64 rng(9);
  NoiseDraw noise = NoiseDraw::sample(model.config(), 1, 3, rng);
  nn::Tape t1, t2;
  auto a = model.forward(t1, Batch::build(seq), noise);
  auto b = model.forward(t2, Batch::build(seq), noise);
  EXPECT_EQ(a.coords.value(), b.coords.value());
  EXPECT_EQ(a.edge_logits.value(), b.edge_logits.value());
}

class ObjectiveGradient : public ::testing::TestWithParam<Variant> {};

TEST_P(ObjectiveGradient, MatchesFiniteDifferences) {
  StgdVae model(stgd::testing::tiny_config(5, GetParam()));
  // Zero-initialized biases put dead channels exactly on the ReLU kink.
  std::mt19937_64 init(17);
  for (auto& p : model.parameters().items()) {
    if (p->name.ends_with("bias")) p->value = random_matrix(p->value.rows(), p->value.cols(), init, -0.1, 0.1);
  }
  auto a = stgd::testing::small_sequence(5, 2, 21), b = stgd::testing::small_sequence(5, 2, 22);
  const SpatiotemporalGraph* seqs[] = {&a, &b};
  const Batch batch = Batch::build(seqs);
  std::mt19937_64 rng(5);
  const NoiseDraw noise = NoiseDraw::sample(model.config(), 2, 2, rng);
  objective::Thresholds th{0.3, 0.2};
  auto loss = [&](bool backward) {
    nn::Tape tape;
    auto obj = objective::build_objective(model.forward(tape, batch, noise), batch, model.config(), th);
    if (backward) tape.backward(obj.loss);
    return obj.loss.scalar();
  };
  // Entries with |grad| below 1e-4 are compared on an absolute 1e-8 scale,
  // the central-difference roundoff level for a loss of this magnitude.
  EXPECT_LT(stgd::testing::check_parameter_gradients(model.parameters(), loss, 6, 13, 1e-5, 1e-4),
            1e-4);
}

INSTANTIATE_TEST_SUITE_P(Variants, ObjectiveGradient,
                         ::testing::Values(Variant::Indep, Variant::Dep, Variant::Pooled),
                         [](const auto& info) { return to_string(info.param); });
